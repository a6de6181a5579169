#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "diode/bytes.hpp"

using EVP_PKEY = struct evp_pkey_st;

namespace diode {

struct CryptoConfig {
    std::string signature_scheme = "SHA256withRSA";
    std::string asym_algorithm = "RSA";
    std::string asym_cipher = "RSA/NONE/PKCS1Padding";
    int asym_keysize = 2048;  // 2048 | 3072 | 4096
    std::string sym_algorithm = "AES";
    std::string sym_mode = "EAX";  // "EAX" or "GCM"
    int sym_keysize = 256;  // 128 | 192 | 256

    void validate() const;  // throws UnsupportedParameters

    bool operator==(const CryptoConfig&) const = default;
};

// Owning handle for an RSA key; may hold just the public half.
class AsymKey {
  public:
    AsymKey() = default;
    explicit AsymKey(EVP_PKEY* owned);
    AsymKey(const AsymKey& other);
    AsymKey& operator=(const AsymKey& other);
    AsymKey(AsymKey&&) noexcept = default;
    AsymKey& operator=(AsymKey&&) noexcept = default;

    static AsymKey generate(int bits);
    static AsymKey from_pem(const std::string& pem);

    std::string private_pem() const;
    std::string public_pem() const;
    AsymKey public_half() const;

    bool has_private() const;
    int bits() const;
    bool same_public(const AsymKey& other) const;
    EVP_PKEY* handle() const { return key_.get(); }
    explicit operator bool() const { return key_ != nullptr; }

  private:
    struct Deleter {
        void operator()(EVP_PKEY* p) const;
    };
    std::unique_ptr<EVP_PKEY, Deleter> key_;
};

// One side's view of the key material: its own private key plus the peer's
// public key, both distributed out of band.
struct KeyMaterial {
    AsymKey sender_signing;  // black: private; red: public only
    AsymKey receiver_wrap;   // black: public only; red: private
};

KeyMaterial generate_keys(const CryptoConfig& cfg);

struct SecureMessage {
    std::uint64_t index = 0;
    Bytes signature;
    Bytes encrypted_key;
    Bytes encrypted_data;  // ciphertext || 16-byte auth tag
    Bytes iv;              // 16 bytes, transmitted in clear
};

// Fresh symmetric key and IV per message; key wrapped with the receiver's
// public key, SHA256-with-RSA signature over the ciphertext (Encrypt-then-MAC).
SecureMessage encrypt_and_sign(ByteView plaintext, std::uint64_t index, const KeyMaterial& keys,
                               const CryptoConfig& cfg);

// Signature is checked before any decryption. The caller compares sm.index
// with its last seen index for warning-only gap detection.
Bytes verify_and_decrypt(const SecureMessage& sm, const KeyMaterial& keys, const CryptoConfig& cfg);

std::string secure_message_to_json(const SecureMessage& sm);
SecureMessage secure_message_from_json(const std::string& json);

// AES-EAX (CTR + OMAC), tag length 16. Exposed for the published-vector tests.
Bytes eax_encrypt(ByteView key, ByteView nonce, ByteView aad, ByteView plaintext);
Bytes eax_decrypt(ByteView key, ByteView nonce, ByteView aad, ByteView ciphertext_and_tag);

Bytes random_bytes(std::size_t n);

}  // namespace diode
