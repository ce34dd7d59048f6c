/* pqchain - post-quantum layer-2 toolkit for blockchain networks.
 *
 * C API over the C++ core: opaque handles, status codes, caller- or
 * library-allocated buffers. Library-allocated outputs are released with
 * pqchain_buffer_free / pqchain_string_free.
 */
#ifndef PQCHAIN_H
#define PQCHAIN_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pqchain_status {
  PQCHAIN_OK = 0,
  PQCHAIN_ERR_INVALID_ARG = 1,
  PQCHAIN_ERR_MALFORMED = 2,
  PQCHAIN_ERR_CRYPTO = 3,
  PQCHAIN_ERR_VERIFY_REJECT = 4,
  PQCHAIN_ERR_NOT_FOUND = 5,
  PQCHAIN_ERR_UNAUTHORIZED = 6,
  PQCHAIN_ERR_DUPLICATE = 7,
  PQCHAIN_ERR_EXPIRED = 8,
  PQCHAIN_ERR_STATE = 9,
  PQCHAIN_ERR_CONFIG = 10,
  PQCHAIN_ERR_IO = 11,
  PQCHAIN_ERR_INTERNAL = 12
} pqchain_status;

const char* pqchain_status_string(pqchain_status status);

/* Thread-local detail message (includes the stable domain error-code string)
 * for the most recent failing call on this thread. */
const char* pqchain_last_error(void);

void pqchain_buffer_free(uint8_t* buffer);
void pqchain_string_free(char* string);

/* ------------------------------------------------------------------ hashes */

pqchain_status pqchain_keccak256(const uint8_t* data, size_t len, uint8_t out[32]);
pqchain_status pqchain_shake256(const uint8_t* data, size_t len, uint8_t* out, size_t out_len);

/* --------------------------------------------------------------- signatures */

#define PQCHAIN_FALCON_PUBLIC_KEY_LEN 897
#define PQCHAIN_FALCON_SECRET_KEY_LEN 1281
#define PQCHAIN_FALCON_SIGNATURE_LEN 666

pqchain_status pqchain_falcon_keygen(const uint8_t* entropy, size_t entropy_len,
                                     uint8_t public_key[PQCHAIN_FALCON_PUBLIC_KEY_LEN],
                                     uint8_t secret_key[PQCHAIN_FALCON_SECRET_KEY_LEN]);
pqchain_status pqchain_falcon_sign(const uint8_t* message, size_t message_len,
                                   const uint8_t secret_key[PQCHAIN_FALCON_SECRET_KEY_LEN],
                                   const uint8_t* entropy, size_t entropy_len,
                                   uint8_t signature[PQCHAIN_FALCON_SIGNATURE_LEN]);
/* PQCHAIN_OK on accept; PQCHAIN_ERR_VERIFY_REJECT on a well-formed but invalid
 * signature; PQCHAIN_ERR_MALFORMED on encoding violations. */
pqchain_status pqchain_falcon_verify(const uint8_t* message, size_t message_len,
                                     const uint8_t* signature, size_t signature_len,
                                     const uint8_t public_key[PQCHAIN_FALCON_PUBLIC_KEY_LEN]);

pqchain_status pqchain_ecdsa_keygen(const uint8_t* entropy, size_t entropy_len,
                                    uint8_t secret_key[32], uint8_t public_key[64]);
/* signature buffer: r(32) || s(32) || recovery id(1) */
pqchain_status pqchain_ecdsa_sign(const uint8_t digest[32], const uint8_t secret_key[32],
                                  uint8_t signature[65]);
pqchain_status pqchain_ecdsa_recover(const uint8_t digest[32], const uint8_t signature[65],
                                     uint8_t public_key[64]);
pqchain_status pqchain_eth_address(const uint8_t public_key[64], uint8_t address[20]);

/* ---------------------------------------------------------------------- kem */

#define PQCHAIN_KEM_PUBLIC_KEY_LEN 1184
#define PQCHAIN_KEM_SECRET_KEY_LEN 2400
#define PQCHAIN_KEM_CIPHERTEXT_LEN 1088
#define PQCHAIN_KEM_SHARED_SECRET_LEN 32

pqchain_status pqchain_kem_keygen(const uint8_t* entropy, size_t entropy_len,
                                  uint8_t public_key[PQCHAIN_KEM_PUBLIC_KEY_LEN],
                                  uint8_t secret_key[PQCHAIN_KEM_SECRET_KEY_LEN]);
pqchain_status pqchain_kem_encap(const uint8_t public_key[PQCHAIN_KEM_PUBLIC_KEY_LEN],
                                 const uint8_t* entropy, size_t entropy_len,
                                 uint8_t ciphertext[PQCHAIN_KEM_CIPHERTEXT_LEN],
                                 uint8_t shared_secret[PQCHAIN_KEM_SHARED_SECRET_LEN]);
pqchain_status pqchain_kem_decap(const uint8_t ciphertext[PQCHAIN_KEM_CIPHERTEXT_LEN],
                                 const uint8_t secret_key[PQCHAIN_KEM_SECRET_KEY_LEN],
                                 uint8_t shared_secret[PQCHAIN_KEM_SHARED_SECRET_LEN]);

/* -------------------------------------------------------------------- world
 *
 * A world bundles the entropy service, the certificate authority, the DID
 * registry and a relay-hub address. Nodes enrolled into it run the full
 * bootstrap: certified entropy, key generation, CSRs, CA issuance, DID
 * registration. */

typedef struct pqchain_world pqchain_world;

pqchain_status pqchain_world_create(const uint8_t* seed, size_t seed_len, pqchain_world** out);
void pqchain_world_destroy(pqchain_world* world);

/* did_out receives a NUL-terminated DID (at least 64 bytes of space). */
pqchain_status pqchain_world_enroll(pqchain_world* world, const char* name, char did_out[64]);

/* Certificate of an enrolled node, canonical binary form (magic "PQX1"). */
pqchain_status pqchain_world_certificate(pqchain_world* world, const char* did, uint8_t** out,
                                         size_t* out_len);
/* Hex-armored text form. */
pqchain_status pqchain_world_certificate_armored(pqchain_world* world, const char* did,
                                                 char** out);
pqchain_status pqchain_world_verify_certificate(pqchain_world* world, const uint8_t* cert,
                                                size_t cert_len, uint64_t at_time);

/* Registry access: resolve -> JSON record; snapshot -> sorted key-value text. */
pqchain_status pqchain_world_resolve(pqchain_world* world, const char* did, char** json_out);
pqchain_status pqchain_world_registry_snapshot(pqchain_world* world, char** out);

/* Entropy-on-demand through an established session of an enrolled node. */
pqchain_status pqchain_world_request_entropy(pqchain_world* world, const char* did, size_t n,
                                             uint8_t** out, size_t* out_len);

/* Meta-transactions. inner_json fields: nonce, gasprice (decimal string),
 * startgas, to (hex20), value (decimal string), data (hex), chain_id; the
 * inner transaction is signed with a user key derived from user_seed. */
pqchain_status pqchain_world_build_metatx(pqchain_world* world, const char* writer_did,
                                          const char* inner_json, const uint8_t* user_seed,
                                          size_t user_seed_len, uint8_t** out, size_t* out_len);

#define PQCHAIN_BACKEND_NATIVE 0
#define PQCHAIN_BACKEND_METERED 1
#define PQCHAIN_CHARGING_OPCODE_FLAT 0
#define PQCHAIN_CHARGING_PRECOMPILE 1

/* Runs entry-point + three-step verification; decision_json receives
 * {verdict, reason, gas, backend, steps}. */
pqchain_status pqchain_world_verify_metatx(pqchain_world* world, const uint8_t* metatx,
                                           size_t metatx_len, int backend, int charging,
                                           char** decision_json);

/* Tunnel demo between two enrolled nodes: handshake + record exchange +
 * tamper probe; returns a JSON report. */
pqchain_status pqchain_world_tunnel_demo(pqchain_world* world, const char* did_a,
                                         const char* did_b, uint32_t records, char** json_out);

/* Relay signer JSON-RPC server (newline-delimited, 127.0.0.1). */
typedef struct pqchain_relay_server pqchain_relay_server;
pqchain_status pqchain_relay_server_start(pqchain_world* world, const char* writer_did,
                                          uint16_t port, pqchain_relay_server** out,
                                          uint16_t* bound_port);
void pqchain_relay_server_stop(pqchain_relay_server* server);

/* ---------------------------------------------------------------- simulator */

/* config_text: the key-value scenario format; outputs returned as strings:
 * metrics JSONL, metrics CSV, hex-encoded chain snapshot. */
pqchain_status pqchain_sim_run(const char* config_text, char** metrics_jsonl,
                               char** metrics_csv, char** chain_snapshot_hex);

/* ----------------------------------------------------------------- entropy */

/* Standalone bootstrap demo: split/recompose + session + n bytes on demand;
 * returns a JSON report including the delivered bytes. */
pqchain_status pqchain_entropy_demo(uint32_t shares, uint64_t timeout, uint32_t n_bytes,
                                    const uint8_t* seed, size_t seed_len, char** json_out);

/* ------------------------------------------------------------------- bench */

/* Per-vector verification cost over a committed KAT file; CSV rows
 * vector,gas,block_gas_limit,ratio. */
pqchain_status pqchain_bench_verify(const char* kat_path, int backend, int charging,
                                    char** csv_out);

#ifdef __cplusplus
}
#endif

#endif /* PQCHAIN_H */
