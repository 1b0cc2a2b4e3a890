#include "dexter/sha256.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <memory>

#include "dexter/errors.hpp"
#include "dexter/strings.hpp"

namespace dexter {

namespace {

struct CtxDeleter {
    void operator()(EVP_MD_CTX* ctx) const { EVP_MD_CTX_free(ctx); }
};
using CtxPtr = std::unique_ptr<EVP_MD_CTX, CtxDeleter>;

std::string finish(EVP_MD_CTX* ctx) {
    uint8_t digest[EVP_MAX_MD_SIZE];
    unsigned int size = 0;
    if (EVP_DigestFinal_ex(ctx, digest, &size) != 1) {
        throw Error(ErrorKind::IoError, "digest finalization failed");
    }
    return to_hex(digest, size);
}

}  // namespace

std::string sha256_hex(std::string_view data) {
    CtxPtr ctx(EVP_MD_CTX_new());
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
        throw Error(ErrorKind::IoError, "digest init failed");
    }
    if (EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1) {
        throw Error(ErrorKind::IoError, "digest update failed");
    }
    return finish(ctx.get());
}

std::string sha256_file_hex(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::IoError, "cannot open " + path);
    }
    CtxPtr ctx(EVP_MD_CTX_new());
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
        throw Error(ErrorKind::IoError, "digest init failed");
    }
    char buffer[1 << 16];
    while (in) {
        in.read(buffer, sizeof(buffer));
        std::streamsize got = in.gcount();
        if (got > 0 &&
            EVP_DigestUpdate(ctx.get(), buffer, static_cast<size_t>(got)) != 1) {
            throw Error(ErrorKind::IoError, "digest update failed");
        }
    }
    if (in.bad()) {
        throw Error(ErrorKind::IoError, "read failed for " + path);
    }
    return finish(ctx.get());
}

}  // namespace dexter
