#include "roadscope/hash.hpp"

#include <openssl/evp.h>

#include "roadscope/error.hpp"

namespace roadscope {

std::string sha256_hex(const void* data, std::size_t len) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int digest_len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx) fail(Errc::internal, "EVP_MD_CTX_new failed");
    bool ok = EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) == 1 &&
              EVP_DigestUpdate(ctx, data, len) == 1 &&
              EVP_DigestFinal_ex(ctx, digest, &digest_len) == 1;
    EVP_MD_CTX_free(ctx);
    if (!ok) fail(Errc::internal, "sha256 computation failed");

    static const char* hexd = "0123456789abcdef";
    std::string out;
    out.reserve(digest_len * 2);
    for (unsigned int i = 0; i < digest_len; ++i) {
        out.push_back(hexd[digest[i] >> 4]);
        out.push_back(hexd[digest[i] & 0xF]);
    }
    return out;
}

std::string sha256_hex(const std::vector<std::uint8_t>& bytes) {
    return sha256_hex(bytes.data(), bytes.size());
}

std::string sha256_hex(const std::string& s) { return sha256_hex(s.data(), s.size()); }

}  // namespace roadscope
