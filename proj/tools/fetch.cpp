#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "fetch.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <memory>

#include "flipguard/error.hpp"
#include "flipguard/io.hpp"
#include "httplib.h"

namespace flipguard::cli {

void download(const std::string& url, const std::filesystem::path& dest) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw DataError("bad url '" + url + "'");
  const auto path_start = url.find('/', scheme_end + 3);
  const std::string origin = url.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

  httplib::Client client(origin);
  client.set_follow_location(true);
  client.set_connection_timeout(30);
  client.set_read_timeout(120);
  auto response = client.Get(path);
  if (!response) {
    throw DataError("download of " + url + " failed: " + httplib::to_string(response.error()));
  }
  if (response->status != 200) {
    throw DataError("download of " + url + " failed: HTTP " + std::to_string(response->status));
  }
  write_file_atomic(dest, response->body);
}

std::string sha256_file(const std::filesystem::path& path) {
  const auto bytes = read_binary_file(path);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw InvariantError("sha256 failed");
  }
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < length; ++i) {
    std::snprintf(buf, sizeof(buf), "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

}  // namespace flipguard::cli
