#pragma once

#include <stdexcept>
#include <string>

namespace steppool {

// Base class for every failure the pool machinery reports.
struct PoolError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Task name was never registered.
struct UnknownTaskError : PoolError {
  using PoolError::PoolError;
};

// Counts or flags in a PoolConfig are inconsistent.
struct InvalidConfigError : PoolError {
  using PoolError::PoolError;
};

// Discrete action outside [0, n) or continuous action outside its bounds.
struct ActionOutOfRangeError : PoolError {
  using PoolError::PoolError;
};

// Action payload has the wrong kind or element count for the task.
struct ActionShapeMismatchError : PoolError {
  using PoolError::PoolError;
};

// Client broke the one-in-flight-per-env protocol (or called out of order).
struct ProtocolViolationError : PoolError {
  using PoolError::PoolError;
};

// More than 2N actions outstanding: a contract breach, never a normal state.
struct QueueOverflowError : PoolError {
  using PoolError::PoolError;
};

// A state block descriptor was needed again before its previous batch was
// consumed: the caller exceeded the ring's slot budget.
struct RingExhaustedError : PoolError {
  using PoolError::PoolError;
};

// async_reset / reset called more than once on one pool.
struct AlreadyStartedError : PoolError {
  using PoolError::PoolError;
};

// Operation requires batch_size == num_envs.
struct SyncOnlyError : PoolError {
  using PoolError::PoolError;
};

// An environment faulted inside a worker; the pool is poisoned.
struct PoolFailedError : PoolError {
  using PoolError::PoolError;
};

// Worker threads could not be created.
struct SpawnFailureError : PoolError {
  using PoolError::PoolError;
};

}  // namespace steppool
