/* C interface for the accconf broadcast-encryption library. */

#ifndef ACCCONF_H
#define ACCCONF_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result of every API call.
 */
typedef enum AccconfStatus {
  ACCCONF_STATUS_OK = 0,
  ACCCONF_STATUS_NULL_POINTER = 1,
  ACCCONF_STATUS_INVALID_ARGUMENT = 2,
  ACCCONF_STATUS_CRYPTO_FAILURE = 3,
  ACCCONF_STATUS_MALFORMED = 4,
  ACCCONF_STATUS_CAPACITY_EXCEEDED = 5,
  ACCCONF_STATUS_SIGNATURE_INVALID = 6,
  ACCCONF_STATUS_BLOCK_EXPIRED = 7,
  ACCCONF_STATUS_REVOKED_SHARE = 8,
  ACCCONF_STATUS_KEY_CHECKSUM_MISMATCH = 9,
  ACCCONF_STATUS_BUFFER_TOO_SMALL = 10,
  ACCCONF_STATUS_INTERNAL_PANIC = 11,
} AccconfStatus;

/*
 Opaque enabling block.
 */
typedef struct AccconfBlock AccconfBlock;

/*
 Opaque Schnorr-group parameters.
 */
typedef struct AccconfParams AccconfParams;

/*
 Opaque user share.
 */
typedef struct AccconfShare AccconfShare;

/*
 Opaque provider verification key.
 */
typedef struct AccconfVerifyKey AccconfVerifyKey;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version as a static NUL-terminated string.
 */
const char *accconf_version(void);

/*
 Static description of a status code.
 */
const char *accconf_status_message(enum AccconfStatus status);

/*
 Search for a Schnorr group with a `bits_q`-bit order, deterministically
 from `seed`.

 # Safety
 `out` must point to writable storage for one pointer.
 */
enum AccconfStatus accconf_params_generate(uint32_t bits_q,
                                           uint64_t seed,
                                           struct AccconfParams **out);

/*
 Parse and fully validate serialized parameters.

 # Safety
 `bytes`/`len` must be readable; `out` must be writable.
 */
enum AccconfStatus accconf_params_from_bytes(const uint8_t *bytes,
                                             uintptr_t len,
                                             struct AccconfParams **out);

/*
 Serialize parameters; two-call pattern via `buf == NULL`.

 # Safety
 Pointers must be valid for the sizes given.
 */
enum AccconfStatus accconf_params_to_bytes(const struct AccconfParams *params,
                                           uint8_t *buf,
                                           uintptr_t cap,
                                           uintptr_t *written);

/*
 Bit length of the group order Q; 0 for a null handle.

 # Safety
 `params` must be a live handle or null.
 */
uint32_t accconf_params_bits_q(const struct AccconfParams *params);

/*
 # Safety
 `params` must come from this library and not be freed twice.
 */
void accconf_params_free(struct AccconfParams *params);

/*
 Parse a serialized user share against the given parameters.

 # Safety
 `bytes`/`len` must be readable; `params` live; `out` writable.
 */
enum AccconfStatus accconf_share_from_bytes(const uint8_t *bytes,
                                            uintptr_t len,
                                            const struct AccconfParams *params,
                                            struct AccconfShare **out);

/*
 # Safety
 `share` must come from this library and not be freed twice.
 */
void accconf_share_free(struct AccconfShare *share);

/*
 Parse a serialized provider verification key.

 # Safety
 `bytes`/`len` must be readable; `params` live; `out` writable.
 */
enum AccconfStatus accconf_verify_key_from_bytes(const uint8_t *bytes,
                                                 uintptr_t len,
                                                 const struct AccconfParams *params,
                                                 struct AccconfVerifyKey **out);

/*
 # Safety
 `vk` must come from this library and not be freed twice.
 */
void accconf_verify_key_free(struct AccconfVerifyKey *vk);

/*
 Parse a serialized enabling block. The provider signature is checked
 at extraction time, against the verification key supplied there.

 # Safety
 `bytes`/`len` must be readable; `params` live; `out` writable.
 */
enum AccconfStatus accconf_block_from_bytes(const uint8_t *bytes,
                                            uintptr_t len,
                                            const struct AccconfParams *params,
                                            struct AccconfBlock **out);

/*
 Monotonic rebuild counter of the block; 0 for a null handle.

 # Safety
 `block` must be a live handle or null.
 */
uint64_t accconf_block_version(const struct AccconfBlock *block);

/*
 Expiry instant in UNIX seconds; 0 means no expiry (or null handle).

 # Safety
 `block` must be a live handle or null.
 */
uint64_t accconf_block_timeout(const struct AccconfBlock *block);

/*
 # Safety
 `block` must come from this library and not be freed twice.
 */
void accconf_block_free(struct AccconfBlock *block);

/*
 Recover the content key from a block and one user share.

 Verifies the provider signature and the block expiry against
 `now_unix_secs` before any algebra. `no_precompute != 0` selects the
 baseline path that recomputes every Lagrangian coefficient.
 `mult_count`/`exp_count` may be null. Key bytes use the two-call
 pattern via `key_buf == NULL`.

 # Safety
 All handles must be live; buffers must match their advertised sizes.
 */
enum AccconfStatus accconf_extract(const struct AccconfBlock *block,
                                   const struct AccconfShare *share,
                                   const struct AccconfParams *params,
                                   const struct AccconfVerifyKey *verify_key,
                                   uint64_t now_unix_secs,
                                   int32_t no_precompute,
                                   uint8_t *key_buf,
                                   uintptr_t key_cap,
                                   uintptr_t *key_len,
                                   uint64_t *mult_count,
                                   uint64_t *exp_count);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ACCCONF_H */
