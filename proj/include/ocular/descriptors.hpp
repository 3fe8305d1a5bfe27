#pragma once

#include <cstdio>
#include <memory>
#include <string>
#include <string_view>

#include "ocular/bsif.hpp"
#include "ocular/lbp.hpp"
#include "ocular/lpq.hpp"

namespace ocular {

enum class DescriptorKind { Bsif, Lbp, Lpq };

// Which texture code to compute, with its parameters.
class DescriptorConfig {
 public:
  static DescriptorConfig bsif(FilterBank bank) {
    DescriptorConfig c(DescriptorKind::Bsif);
    c.bank_ = std::make_shared<const FilterBank>(std::move(bank));
    return c;
  }
  static DescriptorConfig lbp() { return DescriptorConfig(DescriptorKind::Lbp); }
  static DescriptorConfig lpq(LpqConfig cfg = {}) {
    cfg.validate();
    DescriptorConfig c(DescriptorKind::Lpq);
    c.lpq_ = cfg;
    return c;
  }

  DescriptorKind kind() const noexcept { return kind_; }
  const FilterBank& bank() const { return *bank_; }
  const LpqConfig& lpq_config() const noexcept { return lpq_; }

  int cardinality() const noexcept {
    switch (kind_) {
      case DescriptorKind::Bsif: return bank_->cardinality();
      case DescriptorKind::Lbp: return kUniformLbpLabels;
      case DescriptorKind::Lpq: return 256;
    }
    return 0;
  }

  // Identifies the descriptor and its parameters; BSIF includes a checksum of
  // the filter coefficients so differently learned banks never mix.
  std::string fingerprint() const {
    switch (kind_) {
      case DescriptorKind::Bsif: {
        char crc[9];
        std::snprintf(crc, sizeof crc, "%08x", detail::crc32(encode_filter_bank(*bank_)));
        return "bsif-k" + std::to_string(bank_->k()) + "-n" + std::to_string(bank_->n()) + "-" + crc;
      }
      case DescriptorKind::Lbp: return "lbp-u2-r1";
      case DescriptorKind::Lpq: return "lpq-w" + std::to_string(lpq_.window);
    }
    return {};
  }

  CodeImage code_image(const GrayImage& img) const {
    switch (kind_) {
      case DescriptorKind::Bsif: return bsif_code_image(img, *bank_);
      case DescriptorKind::Lbp: return lbp_code_image(img);
      case DescriptorKind::Lpq: return lpq_code_image(img, lpq_);
    }
    throw DataError("unknown descriptor");
  }

 private:
  explicit DescriptorConfig(DescriptorKind kind) : kind_(kind) {}

  DescriptorKind kind_;
  std::shared_ptr<const FilterBank> bank_;
  LpqConfig lpq_;
};

}  // namespace ocular
