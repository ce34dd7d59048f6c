#pragma once

#include "common/bytes.hpp"

namespace pqchain::hash {

Digest256 sha256(BytesView data);
Digest256 hmac_sha256(BytesView key, BytesView data);

} // namespace pqchain::hash
