#pragma once

#define KMAX_VERSION "0.1.0"
