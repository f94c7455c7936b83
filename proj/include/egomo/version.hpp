#pragma once

#define EGOMO_VERSION_STRING "0.1.0"

// Bumped when the on-disk container layout changes incompatibly.
#define EGOMO_CONTAINER_VERSION 1
