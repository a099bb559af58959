// Copyright 2026 The MSDAN Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "msdan/fetch.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <fstream>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <openssl/evp.h>
#include <spdlog/spdlog.h>

#include "msdan/error.hpp"

namespace msdan::fetch {

namespace fs = std::filesystem;

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> words(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

bool is_sha256(std::string_view s) {
  return s.size() == 64 && std::all_of(s.begin(), s.end(), [](char c) {
           return std::isxdigit(static_cast<unsigned char>(c)) != 0;
         });
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool safe_relative(std::string_view p) {
  if (p.empty() || p.front() == '/') return false;
  for (const auto& part : fs::path(std::string(p))) {
    if (part == "..") return false;
  }
  return true;
}

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new(), EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) {
      throw Error(Errc::IoError, "SHA-256 context initialisation failed");
    }
  }
  void update(const void* data, std::size_t n) { EVP_DigestUpdate(ctx_.get(), data, n); }
  std::string hex() {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_.get(), digest, &len);
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
      out += kHex[digest[i] >> 4];
      out += kHex[digest[i] & 0xF];
    }
    return out;
  }

 private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

struct Endpoint {
  std::string scheme_host_port;
  std::string path_prefix;
};

Endpoint split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(Errc::ConfigError, "base_url '" + url + "' lacks a scheme");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  Endpoint e;
  e.scheme_host_port = url.substr(0, path_start);
  e.path_prefix = path_start == std::string::npos ? "/" : url.substr(path_start);
  if (e.path_prefix.back() != '/') e.path_prefix += '/';
  return e;
}

bool file_matches(const fs::path& path, const ManifestEntry& entry) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) return false;
  if (entry.size && fs::file_size(path, ec) != *entry.size) return false;
  return sha256_file(path) == entry.sha256;
}

enum class Outcome { Done, Retry, Fatal };

struct Attempt {
  Outcome outcome = Outcome::Retry;
  std::string message;
  std::size_t bytes = 0;
};

Attempt download_once(httplib::Client& client, const std::string& url_path,
                      const fs::path& part) {
  std::error_code ec;
  const std::uint64_t offset = fs::exists(part, ec) ? fs::file_size(part, ec) : 0;
  httplib::Headers headers;
  if (offset > 0) headers.emplace("Range", "bytes=" + std::to_string(offset) + "-");

  std::ofstream out;
  int status = 0;
  Attempt attempt;
  auto result = client.Get(
      url_path, headers,
      [&](const httplib::Response& res) {
        status = res.status;
        if (status == 206) {
          out.open(part, std::ios::binary | std::ios::app);
        } else if (status == 200) {
          out.open(part, std::ios::binary | std::ios::trunc);
        }
        return true;
      },
      [&](const char* data, std::size_t n) {
        if (!out.is_open()) return true;
        out.write(data, static_cast<std::streamsize>(n));
        attempt.bytes += n;
        return static_cast<bool>(out);
      });
  out.close();
  if (!result) {
    attempt.message = httplib::to_string(result.error());
    return attempt;
  }
  if (status == 200 || status == 206) {
    attempt.outcome = Outcome::Done;
  } else if (status == 416) {
    // The partial file already holds the whole body (or is longer than it);
    // the checksum decides.
    attempt.outcome = Outcome::Done;
  } else if (status >= 500 || status == 408 || status == 429) {
    attempt.message = "HTTP " + std::to_string(status);
  } else {
    attempt.outcome = Outcome::Fatal;
    attempt.message = "HTTP " + std::to_string(status);
  }
  return attempt;
}

}  // namespace

DatasetManifest parse_manifest(std::string_view text) {
  DatasetManifest m;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto w = words(line);
    auto bad = [&](const std::string& why) {
      throw Error(Errc::ConfigError, "manifest line " + std::to_string(line_no) + ": " + why);
    };
    if (m.base_url.empty()) {
      if (w.size() != 2 || w[0] != "base_url") bad("expected 'base_url <url>' first");
      m.base_url = std::string(w[1]);
      continue;
    }
    if (w.size() != 3) bad("expected '<sha256> <size|-> <path>'");
    if (!is_sha256(w[0])) bad("malformed sha256 '" + std::string(w[0]) + "'");
    ManifestEntry e;
    e.sha256 = lower(w[0]);
    if (w[1] != "-") {
      std::uint64_t size = 0;
      const auto [ptr, ec] = std::from_chars(w[1].data(), w[1].data() + w[1].size(), size);
      if (ec != std::errc() || ptr != w[1].data() + w[1].size()) bad("malformed size");
      e.size = size;
    }
    if (!safe_relative(w[2])) bad("path must be relative without '..'");
    e.path = std::string(w[2]);
    m.files.push_back(std::move(e));
  }
  if (m.base_url.empty()) throw Error(Errc::ConfigError, "manifest has no base_url");
  return m;
}

DatasetManifest load_manifest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::ConfigError, "cannot read manifest " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str());
}

std::string manifest_to_text(const DatasetManifest& manifest) {
  std::ostringstream out;
  out << "base_url " << manifest.base_url << '\n';
  for (const auto& e : manifest.files) {
    out << e.sha256 << ' ' << (e.size ? std::to_string(*e.size) : std::string("-")) << ' '
        << e.path << '\n';
  }
  return out.str();
}

DatasetManifest manifest_from_checksums(std::string base_url, std::string_view listing,
                                        std::span<const std::string> suffixes) {
  DatasetManifest m;
  m.base_url = std::move(base_url);
  while (!listing.empty()) {
    const auto nl = listing.find('\n');
    const auto w = words(listing.substr(0, nl));
    listing = nl == std::string_view::npos ? std::string_view{} : listing.substr(nl + 1);
    if (w.size() != 2 || !is_sha256(w[0])) continue;
    std::string_view path = w[1];
    if (!path.empty() && path.front() == '*') path.remove_prefix(1);
    if (!safe_relative(path)) continue;
    const bool keep =
        suffixes.empty() || std::any_of(suffixes.begin(), suffixes.end(),
                                        [&](const std::string& s) { return path.ends_with(s); });
    if (keep) m.files.push_back({lower(w[0]), std::nullopt, std::string(path)});
  }
  return m;
}

std::string sha256_hex(std::span<const std::byte> bytes) {
  Sha256 h;
  h.update(bytes.data(), bytes.size());
  return h.hex();
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot read " + path.string());
  Sha256 h;
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

FetchReport fetch_dataset(const DatasetManifest& manifest, const fs::path& root,
                          const FetchOptions& options) {
  const Endpoint endpoint = split_url(manifest.base_url);
  FetchReport report;
  std::mutex mu;
  std::vector<std::string> network_failures;
  std::vector<std::string> checksum_failures;
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    httplib::Client client(endpoint.scheme_host_port);
    client.set_follow_location(true);
    client.set_connection_timeout(options.timeout);
    client.set_read_timeout(options.timeout);
    for (std::size_t i = next++; i < manifest.files.size(); i = next++) {
      const auto& entry = manifest.files[i];
      const fs::path target = root / entry.path;
      if (file_matches(target, entry)) {
        std::lock_guard lock(mu);
        ++report.already_valid;
        continue;
      }
      std::error_code ec;
      if (fs::exists(target, ec)) {
        spdlog::warn("{} fails its checksum; downloading again", entry.path);
        fs::remove(target, ec);
      }
      fs::create_directories(target.parent_path(), ec);
      fs::path part = target;
      part += ".part";

      std::string last_error;
      bool fatal = false;
      bool checksum_failed = false;
      bool done = false;
      std::size_t bytes = 0;
      auto backoff = options.initial_backoff;
      for (std::size_t a = 0; a < options.max_attempts && !done && !fatal; ++a) {
        if (a > 0) {
          std::this_thread::sleep_for(backoff);
          backoff *= 2;
        }
        const auto attempt = download_once(client, endpoint.path_prefix + entry.path, part);
        bytes += attempt.bytes;
        if (attempt.outcome == Outcome::Fatal) {
          fatal = true;
          last_error = attempt.message;
        } else if (attempt.outcome == Outcome::Retry) {
          last_error = attempt.message;
          spdlog::warn("{}: {} (attempt {}/{})", entry.path, last_error, a + 1,
                       options.max_attempts);
        } else if (file_matches(part, entry)) {
          fs::rename(part, target, ec);
          if (ec) {
            fatal = true;
            last_error = ec.message();
          } else {
            done = true;
          }
        } else {
          checksum_failed = true;
          last_error = "checksum mismatch after download";
          fs::remove(part, ec);
        }
      }

      std::lock_guard lock(mu);
      report.bytes_transferred += bytes;
      if (done) {
        ++report.downloaded;
        spdlog::info("fetched {}", entry.path);
      } else if (checksum_failed && !fatal && last_error.starts_with("checksum")) {
        checksum_failures.push_back(entry.path);
      } else {
        network_failures.push_back(entry.path + " (" + last_error + ")");
      }
    }
  };

  const std::size_t n_workers =
      std::max<std::size_t>(1, std::min(options.workers, manifest.files.size()));
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < n_workers; ++w) threads.emplace_back(worker);
  for (auto& t : threads) t.join();

  auto joined = [](std::vector<std::string> xs) {
    std::sort(xs.begin(), xs.end());
    std::string out;
    for (const auto& x : xs) out += (out.empty() ? "" : ", ") + x;
    return out;
  };
  if (!network_failures.empty()) {
    throw Error(Errc::NetworkFailure,
                "could not download from " + manifest.base_url + ": " + joined(network_failures) +
                    "; check connectivity and rerun to resume");
  }
  if (!checksum_failures.empty()) {
    throw Error(Errc::ChecksumMismatch,
                "downloaded files do not match the manifest: " + joined(checksum_failures));
  }
  return report;
}

}  // namespace msdan::fetch
