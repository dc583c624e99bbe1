#pragma once

#include "deisolab/annotation.hpp"
#include "deisolab/artifacts.hpp"
#include "deisolab/baseline.hpp"
#include "deisolab/classify.hpp"
#include "deisolab/compare.hpp"
#include "deisolab/cross_validation.hpp"
#include "deisolab/dataset_io.hpp"
#include "deisolab/error.hpp"
#include "deisolab/features.hpp"
#include "deisolab/fuzzy.hpp"
#include "deisolab/glcm.hpp"
#include "deisolab/gmm.hpp"
#include "deisolab/image_stats.hpp"
#include "deisolab/ion_image.hpp"
#include "deisolab/kernel_nb.hpp"
#include "deisolab/metrics.hpp"
#include "deisolab/parallel.hpp"
#include "deisolab/pipeline.hpp"
#include "deisolab/preselect.hpp"
#include "deisolab/random.hpp"
#include "deisolab/stats.hpp"
#include "deisolab/synthgen.hpp"
#include "deisolab/text.hpp"
#include "deisolab/types.hpp"
#include "deisolab/version.hpp"
