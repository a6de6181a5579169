#pragma once

#include <stdexcept>
#include <string>

namespace diode {

struct DiodeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// envelope
struct MalformedEnvelope : DiodeError { using DiodeError::DiodeError; };

// segmentation / packet codec
struct PayloadTooLarge : DiodeError { using DiodeError::DiodeError; };
struct UnknownPacketType : DiodeError { using DiodeError::DiodeError; };
struct TruncatedPacket : DiodeError { using DiodeError::DiodeError; };
struct LengthMismatch : DiodeError { using DiodeError::DiodeError; };

// reassembly
struct ChecksumMismatch : DiodeError { using DiodeError::DiodeError; };
struct InconsistentMessage : DiodeError { using DiodeError::DiodeError; };
struct BufferFull : DiodeError { using DiodeError::DiodeError; };

// crypto
struct UnsupportedParameters : DiodeError { using DiodeError::DiodeError; };
struct KeyTooSmallForWrap : DiodeError { using DiodeError::DiodeError; };
struct SignatureInvalid : DiodeError { using DiodeError::DiodeError; };
struct KeyUnwrapFailed : DiodeError { using DiodeError::DiodeError; };
struct AeadAuthFailed : DiodeError { using DiodeError::DiodeError; };
struct CryptoError : DiodeError { using DiodeError::DiodeError; };

// broker
struct NoSuchExchange : DiodeError { using DiodeError::DiodeError; };
struct NoSuchQueue : DiodeError { using DiodeError::DiodeError; };
struct KindConflict : DiodeError { using DiodeError::DiodeError; };
struct MissingOriginHeader : DiodeError { using DiodeError::DiodeError; };

// transport
struct OversizedPacket : DiodeError { using DiodeError::DiodeError; };
struct SocketError : DiodeError { using DiodeError::DiodeError; };
struct BindError : DiodeError { using DiodeError::DiodeError; };

// config
struct ParseError : DiodeError { using DiodeError::DiodeError; };

}  // namespace diode
