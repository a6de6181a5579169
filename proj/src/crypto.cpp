#include "diode/crypto.hpp"

#include <openssl/bio.h>
#include <openssl/core_names.h>
#include <openssl/err.h>
#include <openssl/evp.h>
#include <openssl/param_build.h>
#include <openssl/pem.h>
#include <openssl/rand.h>
#include <openssl/rsa.h>

#include <cstring>
#include <nlohmann/json.hpp>

#include "diode/errors.hpp"

namespace diode {

namespace {

constexpr std::size_t kTagLen = 16;
constexpr std::size_t kIvLen = 16;
constexpr std::size_t kPkcs1Overhead = 11;

[[noreturn]] void throw_openssl(const char* what) {
    char buf[256];
    ERR_error_string_n(ERR_get_error(), buf, sizeof(buf));
    throw CryptoError(std::string(what) + ": " + buf);
}

struct EvpCtx {
    EVP_CIPHER_CTX* p = EVP_CIPHER_CTX_new();
    ~EvpCtx() { EVP_CIPHER_CTX_free(p); }
};

const EVP_CIPHER* ctr_cipher(std::size_t key_len) {
    switch (key_len) {
        case 16: return EVP_aes_128_ctr();
        case 24: return EVP_aes_192_ctr();
        case 32: return EVP_aes_256_ctr();
    }
    throw UnsupportedParameters("AES key must be 128/192/256 bits");
}

const EVP_CIPHER* gcm_cipher(std::size_t key_len) {
    switch (key_len) {
        case 16: return EVP_aes_128_gcm();
        case 24: return EVP_aes_192_gcm();
        case 32: return EVP_aes_256_gcm();
    }
    throw UnsupportedParameters("AES key must be 128/192/256 bits");
}

const char* cmac_cipher_name(std::size_t key_len) {
    switch (key_len) {
        case 16: return "AES-128-CBC";
        case 24: return "AES-192-CBC";
        case 32: return "AES-256-CBC";
    }
    throw UnsupportedParameters("AES key must be 128/192/256 bits");
}

// OMAC^t(K, M) = CMAC(K, [0]^15 || t || M), the tweaked OMAC the EAX
// composition is built from.
std::array<std::uint8_t, 16> omac(ByteView key, std::uint8_t tweak, ByteView data) {
    EVP_MAC* mac = EVP_MAC_fetch(nullptr, "CMAC", nullptr);
    if (!mac) throw_openssl("CMAC fetch");
    EVP_MAC_CTX* ctx = EVP_MAC_CTX_new(mac);
    EVP_MAC_free(mac);
    if (!ctx) throw_openssl("CMAC ctx");

    char cipher_name[16];
    std::snprintf(cipher_name, sizeof(cipher_name), "%s", cmac_cipher_name(key.size()));
    OSSL_PARAM params[] = {
        OSSL_PARAM_construct_utf8_string(OSSL_MAC_PARAM_CIPHER, cipher_name, 0),
        OSSL_PARAM_construct_end(),
    };

    std::array<std::uint8_t, 16> out{};
    std::uint8_t prefix[16] = {};
    prefix[15] = tweak;
    std::size_t out_len = 0;
    bool ok = EVP_MAC_init(ctx, key.data(), key.size(), params) == 1 &&
              EVP_MAC_update(ctx, prefix, sizeof(prefix)) == 1 &&
              (data.empty() || EVP_MAC_update(ctx, data.data(), data.size()) == 1) &&
              EVP_MAC_final(ctx, out.data(), &out_len, out.size()) == 1;
    EVP_MAC_CTX_free(ctx);
    if (!ok || out_len != out.size()) throw_openssl("CMAC");
    return out;
}

Bytes aes_ctr(ByteView key, const std::array<std::uint8_t, 16>& counter, ByteView data) {
    EvpCtx ctx;
    if (EVP_EncryptInit_ex(ctx.p, ctr_cipher(key.size()), nullptr, key.data(), counter.data()) != 1)
        throw_openssl("AES-CTR init");
    Bytes out(data.size());
    int len = 0;
    if (!data.empty() &&
        EVP_EncryptUpdate(ctx.p, out.data(), &len, data.data(), static_cast<int>(data.size())) != 1)
        throw_openssl("AES-CTR update");
    return out;
}

Bytes gcm_encrypt(ByteView key, ByteView iv, ByteView aad, ByteView plaintext) {
    EvpCtx ctx;
    if (EVP_EncryptInit_ex(ctx.p, gcm_cipher(key.size()), nullptr, nullptr, nullptr) != 1 ||
        EVP_CIPHER_CTX_ctrl(ctx.p, EVP_CTRL_GCM_SET_IVLEN, static_cast<int>(iv.size()), nullptr) !=
            1 ||
        EVP_EncryptInit_ex(ctx.p, nullptr, nullptr, key.data(), iv.data()) != 1)
        throw_openssl("GCM init");
    int len = 0;
    if (!aad.empty() &&
        EVP_EncryptUpdate(ctx.p, nullptr, &len, aad.data(), static_cast<int>(aad.size())) != 1)
        throw_openssl("GCM aad");
    Bytes out(plaintext.size() + kTagLen);
    if (!plaintext.empty() &&
        EVP_EncryptUpdate(ctx.p, out.data(), &len, plaintext.data(),
                          static_cast<int>(plaintext.size())) != 1)
        throw_openssl("GCM update");
    if (EVP_EncryptFinal_ex(ctx.p, out.data() + plaintext.size(), &len) != 1 ||
        EVP_CIPHER_CTX_ctrl(ctx.p, EVP_CTRL_GCM_GET_TAG, kTagLen,
                            out.data() + plaintext.size()) != 1)
        throw_openssl("GCM tag");
    return out;
}

Bytes gcm_decrypt(ByteView key, ByteView iv, ByteView aad, ByteView ct_and_tag) {
    if (ct_and_tag.size() < kTagLen) throw AeadAuthFailed("GCM: ciphertext shorter than tag");
    ByteView ct = ct_and_tag.first(ct_and_tag.size() - kTagLen);
    ByteView tag = ct_and_tag.last(kTagLen);
    EvpCtx ctx;
    if (EVP_DecryptInit_ex(ctx.p, gcm_cipher(key.size()), nullptr, nullptr, nullptr) != 1 ||
        EVP_CIPHER_CTX_ctrl(ctx.p, EVP_CTRL_GCM_SET_IVLEN, static_cast<int>(iv.size()), nullptr) !=
            1 ||
        EVP_DecryptInit_ex(ctx.p, nullptr, nullptr, key.data(), iv.data()) != 1)
        throw_openssl("GCM init");
    int len = 0;
    if (!aad.empty() &&
        EVP_DecryptUpdate(ctx.p, nullptr, &len, aad.data(), static_cast<int>(aad.size())) != 1)
        throw_openssl("GCM aad");
    Bytes out(ct.size());
    if (!ct.empty() && EVP_DecryptUpdate(ctx.p, out.data(), &len, ct.data(),
                                         static_cast<int>(ct.size())) != 1)
        throw_openssl("GCM update");
    if (EVP_CIPHER_CTX_ctrl(ctx.p, EVP_CTRL_GCM_SET_TAG, kTagLen,
                            const_cast<std::uint8_t*>(tag.data())) != 1)
        throw_openssl("GCM tag");
    std::uint8_t tail[EVP_MAX_BLOCK_LENGTH];
    if (EVP_DecryptFinal_ex(ctx.p, tail, &len) != 1)
        throw AeadAuthFailed("GCM: authentication failed");
    return out;
}

bool is_eax(const CryptoConfig& cfg) {
    if (cfg.sym_mode == "EAX") return true;
    if (cfg.sym_mode == "GCM") return false;
    throw UnsupportedParameters("symmetric mode must be EAX or GCM");
}

}  // namespace

void CryptoConfig::validate() const {
    if (asym_algorithm != "RSA") throw UnsupportedParameters("asymmetric algorithm must be RSA");
    if (asym_keysize != 2048 && asym_keysize != 3072 && asym_keysize != 4096)
        throw UnsupportedParameters("asymmetric keysize must be 2048/3072/4096");
    if (sym_algorithm != "AES") throw UnsupportedParameters("symmetric algorithm must be AES");
    if (sym_keysize != 128 && sym_keysize != 192 && sym_keysize != 256)
        throw UnsupportedParameters("symmetric keysize must be 128/192/256");
    is_eax(*this);
}

Bytes random_bytes(std::size_t n) {
    Bytes out(n);
    if (n > 0 && RAND_bytes(out.data(), static_cast<int>(n)) != 1) throw_openssl("RAND_bytes");
    return out;
}

Bytes eax_encrypt(ByteView key, ByteView nonce, ByteView aad, ByteView plaintext) {
    auto n = omac(key, 0, nonce);
    auto h = omac(key, 1, aad);
    Bytes ct = aes_ctr(key, n, plaintext);
    auto c = omac(key, 2, ct);
    ct.reserve(ct.size() + kTagLen);
    for (std::size_t i = 0; i < kTagLen; ++i) ct.push_back(n[i] ^ c[i] ^ h[i]);
    return ct;
}

Bytes eax_decrypt(ByteView key, ByteView nonce, ByteView aad, ByteView ciphertext_and_tag) {
    if (ciphertext_and_tag.size() < kTagLen)
        throw AeadAuthFailed("EAX: ciphertext shorter than tag");
    ByteView ct = ciphertext_and_tag.first(ciphertext_and_tag.size() - kTagLen);
    ByteView tag = ciphertext_and_tag.last(kTagLen);
    auto n = omac(key, 0, nonce);
    auto h = omac(key, 1, aad);
    auto c = omac(key, 2, ct);
    std::uint8_t diff = 0;
    for (std::size_t i = 0; i < kTagLen; ++i) diff |= tag[i] ^ (n[i] ^ c[i] ^ h[i]);
    if (diff != 0) throw AeadAuthFailed("EAX: authentication failed");
    return aes_ctr(key, n, ct);
}

void AsymKey::Deleter::operator()(EVP_PKEY* p) const { EVP_PKEY_free(p); }

AsymKey::AsymKey(EVP_PKEY* owned) : key_(owned) {}

AsymKey::AsymKey(const AsymKey& other) {
    if (other.key_) {
        EVP_PKEY_up_ref(other.key_.get());
        key_.reset(other.key_.get());
    }
}

AsymKey& AsymKey::operator=(const AsymKey& other) {
    if (this != &other) {
        AsymKey tmp(other);
        key_ = std::move(tmp.key_);
    }
    return *this;
}

AsymKey AsymKey::generate(int bits) {
    EVP_PKEY* key = EVP_RSA_gen(static_cast<unsigned int>(bits));
    if (!key) throw_openssl("RSA keygen");
    return AsymKey(key);
}

AsymKey AsymKey::from_pem(const std::string& pem) {
    BIO* bio = BIO_new_mem_buf(pem.data(), static_cast<int>(pem.size()));
    if (!bio) throw_openssl("BIO");
    EVP_PKEY* key = PEM_read_bio_PrivateKey(bio, nullptr, nullptr, nullptr);
    if (!key) {
        BIO_reset(bio);
        key = PEM_read_bio_PUBKEY(bio, nullptr, nullptr, nullptr);
    }
    BIO_free(bio);
    if (!key) throw CryptoError("not a PEM key");
    return AsymKey(key);
}

namespace {

std::string pem_from_bio(BIO* bio) {
    char* data = nullptr;
    long len = BIO_get_mem_data(bio, &data);
    std::string out(data, static_cast<std::size_t>(len));
    BIO_free(bio);
    return out;
}

}  // namespace

std::string AsymKey::private_pem() const {
    if (!has_private()) throw CryptoError("no private half");
    BIO* bio = BIO_new(BIO_s_mem());
    if (PEM_write_bio_PrivateKey(bio, key_.get(), nullptr, nullptr, 0, nullptr, nullptr) != 1) {
        BIO_free(bio);
        throw_openssl("PEM write private");
    }
    return pem_from_bio(bio);
}

std::string AsymKey::public_pem() const {
    BIO* bio = BIO_new(BIO_s_mem());
    if (PEM_write_bio_PUBKEY(bio, key_.get()) != 1) {
        BIO_free(bio);
        throw_openssl("PEM write public");
    }
    return pem_from_bio(bio);
}

AsymKey AsymKey::public_half() const { return from_pem(public_pem()); }

bool AsymKey::has_private() const {
    if (!key_) return false;
    BIGNUM* d = nullptr;
    if (EVP_PKEY_get_bn_param(key_.get(), OSSL_PKEY_PARAM_RSA_D, &d) != 1) return false;
    BN_clear_free(d);
    return true;
}

int AsymKey::bits() const { return key_ ? EVP_PKEY_get_bits(key_.get()) : 0; }

bool AsymKey::same_public(const AsymKey& other) const {
    return key_ && other.key_ && EVP_PKEY_eq(key_.get(), other.key_.get()) == 1;
}

KeyMaterial generate_keys(const CryptoConfig& cfg) {
    cfg.validate();
    KeyMaterial keys;
    keys.sender_signing = AsymKey::generate(cfg.asym_keysize);
    keys.receiver_wrap = AsymKey::generate(cfg.asym_keysize);
    return keys;
}

SecureMessage encrypt_and_sign(ByteView plaintext, std::uint64_t index, const KeyMaterial& keys,
                               const CryptoConfig& cfg) {
    cfg.validate();
    const std::size_t key_len = static_cast<std::size_t>(cfg.sym_keysize) / 8;
    const std::size_t modulus = static_cast<std::size_t>(keys.receiver_wrap.bits()) / 8;
    if (key_len + kPkcs1Overhead > modulus)
        throw KeyTooSmallForWrap("symmetric key plus padding exceeds RSA modulus");

    SecureMessage sm;
    sm.index = index;
    Bytes key = random_bytes(key_len);
    sm.iv = random_bytes(kIvLen);
    sm.encrypted_data = is_eax(cfg) ? eax_encrypt(key, sm.iv, {}, plaintext)
                                    : gcm_encrypt(key, sm.iv, {}, plaintext);

    // Wrap the fresh key with the receiver's public key (RSA PKCS1 v1.5).
    EVP_PKEY_CTX* ctx = EVP_PKEY_CTX_new(keys.receiver_wrap.handle(), nullptr);
    if (!ctx || EVP_PKEY_encrypt_init(ctx) != 1 ||
        EVP_PKEY_CTX_set_rsa_padding(ctx, RSA_PKCS1_PADDING) != 1) {
        EVP_PKEY_CTX_free(ctx);
        throw_openssl("RSA wrap init");
    }
    std::size_t wrapped_len = 0;
    if (EVP_PKEY_encrypt(ctx, nullptr, &wrapped_len, key.data(), key.size()) != 1) {
        EVP_PKEY_CTX_free(ctx);
        throw_openssl("RSA wrap size");
    }
    sm.encrypted_key.resize(wrapped_len);
    if (EVP_PKEY_encrypt(ctx, sm.encrypted_key.data(), &wrapped_len, key.data(), key.size()) != 1) {
        EVP_PKEY_CTX_free(ctx);
        throw_openssl("RSA wrap");
    }
    sm.encrypted_key.resize(wrapped_len);
    EVP_PKEY_CTX_free(ctx);

    // SHA256-with-RSA over the ciphertext: Encrypt-then-MAC.
    EVP_MD_CTX* md = EVP_MD_CTX_new();
    if (!md ||
        EVP_DigestSignInit(md, nullptr, EVP_sha256(), nullptr, keys.sender_signing.handle()) != 1) {
        EVP_MD_CTX_free(md);
        throw_openssl("sign init");
    }
    std::size_t sig_len = 0;
    if (EVP_DigestSign(md, nullptr, &sig_len, sm.encrypted_data.data(),
                       sm.encrypted_data.size()) != 1) {
        EVP_MD_CTX_free(md);
        throw_openssl("sign size");
    }
    sm.signature.resize(sig_len);
    if (EVP_DigestSign(md, sm.signature.data(), &sig_len, sm.encrypted_data.data(),
                       sm.encrypted_data.size()) != 1) {
        EVP_MD_CTX_free(md);
        throw_openssl("sign");
    }
    sm.signature.resize(sig_len);
    EVP_MD_CTX_free(md);
    return sm;
}

Bytes verify_and_decrypt(const SecureMessage& sm, const KeyMaterial& keys,
                         const CryptoConfig& cfg) {
    cfg.validate();

    // Step 1: signature over the ciphertext, before touching the private key.
    EVP_MD_CTX* md = EVP_MD_CTX_new();
    if (!md || EVP_DigestVerifyInit(md, nullptr, EVP_sha256(), nullptr,
                                    keys.sender_signing.handle()) != 1) {
        EVP_MD_CTX_free(md);
        throw_openssl("verify init");
    }
    int ok = EVP_DigestVerify(md, sm.signature.data(), sm.signature.size(),
                              sm.encrypted_data.data(), sm.encrypted_data.size());
    EVP_MD_CTX_free(md);
    if (ok != 1) throw SignatureInvalid("secure message: signature verification failed");

    // Step 2: unwrap the symmetric key.
    EVP_PKEY_CTX* ctx = EVP_PKEY_CTX_new(keys.receiver_wrap.handle(), nullptr);
    if (!ctx || EVP_PKEY_decrypt_init(ctx) != 1 ||
        EVP_PKEY_CTX_set_rsa_padding(ctx, RSA_PKCS1_PADDING) != 1) {
        EVP_PKEY_CTX_free(ctx);
        throw_openssl("RSA unwrap init");
    }
    std::size_t key_len = 0;
    if (EVP_PKEY_decrypt(ctx, nullptr, &key_len, sm.encrypted_key.data(),
                         sm.encrypted_key.size()) != 1) {
        EVP_PKEY_CTX_free(ctx);
        throw KeyUnwrapFailed("secure message: key unwrap failed");
    }
    Bytes key(key_len);
    if (EVP_PKEY_decrypt(ctx, key.data(), &key_len, sm.encrypted_key.data(),
                         sm.encrypted_key.size()) != 1) {
        EVP_PKEY_CTX_free(ctx);
        throw KeyUnwrapFailed("secure message: key unwrap failed");
    }
    EVP_PKEY_CTX_free(ctx);
    key.resize(key_len);
    if (key.size() != static_cast<std::size_t>(cfg.sym_keysize) / 8)
        throw KeyUnwrapFailed("secure message: unwrapped key has wrong length");

    // Step 3: AEAD decrypt + authenticate.
    return is_eax(cfg) ? eax_decrypt(key, sm.iv, {}, sm.encrypted_data)
                       : gcm_decrypt(key, sm.iv, {}, sm.encrypted_data);
}

std::string secure_message_to_json(const SecureMessage& sm) {
    nlohmann::ordered_json j;
    j["secureMessage"] = {
        {"index", sm.index},
        {"signature", base64_encode(sm.signature)},
        {"encryptedKey", base64_encode(sm.encrypted_key)},
        {"encryptedData", base64_encode(sm.encrypted_data)},
        {"iv", base64_encode(sm.iv)},
    };
    return j.dump();
}

SecureMessage secure_message_from_json(const std::string& json) {
    auto j = nlohmann::json::parse(json, nullptr, false);
    if (j.is_discarded() || !j.contains("secureMessage"))
        throw MalformedEnvelope("secure message: bad JSON");
    try {
        const auto& s = j.at("secureMessage");
        SecureMessage sm;
        sm.index = s.at("index").get<std::uint64_t>();
        sm.signature = base64_decode(s.at("signature").get<std::string>());
        sm.encrypted_key = base64_decode(s.at("encryptedKey").get<std::string>());
        sm.encrypted_data = base64_decode(s.at("encryptedData").get<std::string>());
        sm.iv = base64_decode(s.at("iv").get<std::string>());
        return sm;
    } catch (const nlohmann::json::exception& e) {
        throw MalformedEnvelope(std::string("secure message: ") + e.what());
    }
}

}  // namespace diode
