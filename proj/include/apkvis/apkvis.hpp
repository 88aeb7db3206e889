#pragma once

#include "apkvis/annotator.hpp"
#include "apkvis/apk_container.hpp"
#include "apkvis/axml.hpp"
#include "apkvis/baseline.hpp"
#include "apkvis/byte_image.hpp"
#include "apkvis/dataset.hpp"
#include "apkvis/digest.hpp"
#include "apkvis/error.hpp"
#include "apkvis/label.hpp"
#include "apkvis/metrics.hpp"
#include "apkvis/pipeline.hpp"
#include "apkvis/png_io.hpp"
#include "apkvis/text_features.hpp"
#include "apkvis/xml_text.hpp"
