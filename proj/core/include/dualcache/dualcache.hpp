#pragma once

#include "dualcache/adapter.hpp"
#include "dualcache/cache_model.hpp"
#include "dualcache/channel_selector.hpp"
#include "dualcache/embedding_store.hpp"
#include "dualcache/error.hpp"
#include "dualcache/eval.hpp"
#include "dualcache/text_classifier.hpp"
