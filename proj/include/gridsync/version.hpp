#pragma once

#define GRIDSYNC_VERSION "0.1.0"
