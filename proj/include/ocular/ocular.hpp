#pragma once

#include "ocular/align.hpp"
#include "ocular/bsif.hpp"
#include "ocular/code_image.hpp"
#include "ocular/dataset.hpp"
#include "ocular/descriptors.hpp"
#include "ocular/error.hpp"
#include "ocular/eval.hpp"
#include "ocular/features.hpp"
#include "ocular/image.hpp"
#include "ocular/lbp.hpp"
#include "ocular/lpq.hpp"
#include "ocular/report.hpp"
#include "ocular/svm.hpp"
#include "ocular/synth.hpp"
