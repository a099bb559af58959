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

#include "msdan/edf.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>

#include "msdan/error.hpp"

namespace msdan::edf {

namespace {

constexpr std::size_t kFixedHeaderBytes = 256;
constexpr std::size_t kSignalHeaderBytes = 256;

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(' ');
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(' ');
  return s.substr(first, last - first + 1);
}

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::byte> bytes) : bytes_(bytes) {}

  std::string_view field(std::size_t width) {
    if (pos_ + width > bytes_.size()) {
      throw Error(Errc::TruncatedFile, "header ends inside a field");
    }
    std::string_view out(reinterpret_cast<const char*>(bytes_.data()) + pos_,
                         width);
    pos_ += width;
    return out;
  }

  // Free-text fields are taken verbatim; some recorders emit Latin-1 here.
  std::string text(std::size_t width) { return std::string(trim(field(width))); }

  template <typename T>
  T number(std::size_t width, std::string_view name) {
    auto raw = trim(field(width));
    T value{};
    // A leading '+' is legal in EDF numeric fields.
    if (!raw.empty() && raw.front() == '+') raw.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), value);
    if (raw.empty() || ec != std::errc() || ptr != raw.data() + raw.size()) {
      throw Error(Errc::MalformedHeader, std::string("field ") +
                                             std::string(name) +
                                             " is not numeric: '" +
                                             std::string(raw) + "'");
    }
    return value;
  }

 private:
  std::span<const std::byte> bytes_;
  std::size_t pos_ = 0;
};

int two_digits(std::string_view s, std::size_t at) {
  const char a = s[at];
  const char b = s[at + 1];
  if (a < '0' || a > '9' || b < '0' || b > '9') {
    throw Error(Errc::MalformedHeader, "bad date/time field '" + std::string(s) + "'");
  }
  return (a - '0') * 10 + (b - '0');
}

StartDateTime parse_start(std::string_view date, std::string_view time) {
  if (date.size() != 8 || time.size() != 8) {
    throw Error(Errc::MalformedHeader, "start date/time must be 8 characters");
  }
  StartDateTime out;
  out.day = two_digits(date, 0);
  out.month = two_digits(date, 3);
  const int yy = two_digits(date, 6);
  // EDF clipping date: 85..99 -> 19xx, 00..84 -> 20xx.
  out.year = yy >= 85 ? 1900 + yy : 2000 + yy;
  out.hour = two_digits(time, 0);
  out.minute = two_digits(time, 3);
  out.second = two_digits(time, 6);
  return out;
}

void put_text(std::string& out, std::string_view value, std::size_t width,
              std::string_view name) {
  if (value.size() > width) {
    throw Error(Errc::MalformedHeader, std::string("value too wide for field ") +
                                           std::string(name));
  }
  out.append(value);
  out.append(width - value.size(), ' ');
}

std::string format_number(double value, std::size_t width) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, value);
  std::string s(buf, res.ptr);
  for (int precision = 15; s.size() > width && precision > 0; --precision) {
    res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general,
                        precision);
    s.assign(buf, res.ptr);
  }
  return s;
}

std::string format_number(long value) { return std::to_string(value); }

void put_two(std::string& out, int v) {
  out.push_back(static_cast<char>('0' + (v / 10) % 10));
  out.push_back(static_cast<char>('0' + v % 10));
}

std::vector<std::byte> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  std::vector<char> chars((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  std::vector<std::byte> bytes(chars.size());
  std::transform(chars.begin(), chars.end(), bytes.begin(),
                 [](char c) { return static_cast<std::byte>(c); });
  return bytes;
}

}  // namespace

int Header::record_samples() const {
  int total = 0;
  for (const auto& s : signals) total += s.samples_per_record;
  return total;
}

double Header::sample_rate(int signal) const {
  return signals.at(static_cast<std::size_t>(signal)).samples_per_record /
         record_duration;
}

std::size_t EdfFile::signal_index(std::string_view label) const {
  for (std::size_t i = 0; i < header.signals.size(); ++i) {
    if (header.signals[i].label == label) return i;
  }
  throw Error(Errc::SignalNotFound, "no signal labelled '" + std::string(label) + "'");
}

EdfFile parse_edf(std::span<const std::byte> bytes) {
  if (bytes.size() < kFixedHeaderBytes) {
    throw Error(Errc::TruncatedFile, "shorter than the 256-byte fixed header");
  }
  HeaderReader reader(bytes);
  EdfFile file;
  Header& h = file.header;
  h.version = reader.text(8);
  h.patient_id = reader.text(80);
  h.recording_id = reader.text(80);
  const std::string date = reader.text(8);
  const std::string time = reader.text(8);
  h.start = parse_start(date, time);
  h.header_bytes = reader.number<int>(8, "header bytes");
  h.reserved = reader.text(44);
  h.record_count = reader.number<long>(8, "record count");
  h.record_duration = reader.number<double>(8, "record duration");
  const int ns = reader.number<int>(4, "signal count");

  if (ns < 1) throw Error(Errc::MalformedHeader, "signal count must be >= 1");
  if (h.header_bytes != static_cast<int>(kFixedHeaderBytes + kSignalHeaderBytes * ns)) {
    throw Error(Errc::MalformedHeader,
                "header bytes " + std::to_string(h.header_bytes) +
                    " != 256 + 256 * " + std::to_string(ns));
  }
  if (h.record_duration < 0.0) {
    throw Error(Errc::MalformedHeader, "record duration must not be negative");
  }

  h.signals.resize(static_cast<std::size_t>(ns));
  for (auto& s : h.signals) s.label = reader.text(16);
  for (auto& s : h.signals) s.transducer = reader.text(80);
  for (auto& s : h.signals) s.physical_dimension = reader.text(8);
  for (auto& s : h.signals) s.physical_min = reader.number<double>(8, "physical min");
  for (auto& s : h.signals) s.physical_max = reader.number<double>(8, "physical max");
  for (auto& s : h.signals) s.digital_min = reader.number<int>(8, "digital min");
  for (auto& s : h.signals) s.digital_max = reader.number<int>(8, "digital max");
  for (auto& s : h.signals) s.prefiltering = reader.text(80);
  for (auto& s : h.signals) s.samples_per_record = reader.number<int>(8, "samples per record");
  for (auto& s : h.signals) s.reserved = reader.text(32);

  // A zero record duration is only meaningful for annotation-only EDF+ files.
  if (h.record_duration == 0.0 && h.record_count != 0 &&
      !std::all_of(h.signals.begin(), h.signals.end(),
                   [](const SignalHeader& s) { return s.label == kAnnotationsLabel; })) {
    throw Error(Errc::MalformedHeader, "record duration must be positive");
  }
  for (const auto& s : h.signals) {
    if (s.digital_min >= s.digital_max) {
      throw Error(Errc::MalformedHeader, "digital_min >= digital_max for '" + s.label + "'");
    }
    if (s.physical_min == s.physical_max) {
      throw Error(Errc::MalformedHeader, "physical_min == physical_max for '" + s.label + "'");
    }
    if (s.samples_per_record < 0) {
      throw Error(Errc::MalformedHeader, "negative samples per record for '" + s.label + "'");
    }
  }

  const std::size_t record_bytes = 2 * static_cast<std::size_t>(h.record_samples());
  if (bytes.size() < static_cast<std::size_t>(h.header_bytes)) {
    throw Error(Errc::TruncatedFile, "shorter than the declared header");
  }
  const std::size_t data_bytes = bytes.size() - static_cast<std::size_t>(h.header_bytes);
  if (h.record_count == -1) {
    // Recording still open when the header was written; infer from length.
    h.record_count = record_bytes == 0 ? 0 : static_cast<long>(data_bytes / record_bytes);
  }
  if (h.record_count < 0) throw Error(Errc::MalformedHeader, "negative record count");
  const std::size_t needed = static_cast<std::size_t>(h.record_count) * record_bytes;
  if (data_bytes < needed) {
    throw Error(Errc::TruncatedFile, "need " + std::to_string(needed) +
                                         " data bytes, have " + std::to_string(data_bytes));
  }

  file.digital.resize(h.signals.size());
  for (std::size_t i = 0; i < h.signals.size(); ++i) {
    file.digital[i].reserve(static_cast<std::size_t>(h.record_count) *
                            static_cast<std::size_t>(h.signals[i].samples_per_record));
  }
  const std::byte* p = bytes.data() + h.header_bytes;
  for (long r = 0; r < h.record_count; ++r) {
    for (std::size_t i = 0; i < h.signals.size(); ++i) {
      auto& out = file.digital[i];
      for (int k = 0; k < h.signals[i].samples_per_record; ++k) {
        const auto lo = static_cast<std::uint16_t>(p[0]);
        const auto hi = static_cast<std::uint16_t>(p[1]);
        out.push_back(static_cast<std::int16_t>(static_cast<std::uint16_t>(lo | (hi << 8))));
        p += 2;
      }
    }
  }
  return file;
}

EdfFile read_edf(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  return parse_edf(bytes);
}

std::vector<std::byte> serialize_edf(const EdfFile& file) {
  const Header& h = file.header;
  const std::size_t ns = h.signals.size();
  if (ns == 0) throw Error(Errc::MalformedHeader, "no signals");
  if (file.digital.size() != ns) {
    throw Error(Errc::MalformedHeader, "digital arrays do not match signal count");
  }
  for (std::size_t i = 0; i < ns; ++i) {
    const auto expected = static_cast<std::size_t>(h.record_count) *
                          static_cast<std::size_t>(h.signals[i].samples_per_record);
    if (file.digital[i].size() != expected) {
      throw Error(Errc::MalformedHeader, "signal '" + h.signals[i].label +
                                             "' has the wrong number of samples");
    }
  }

  std::string text;
  text.reserve(kFixedHeaderBytes + kSignalHeaderBytes * ns);
  put_text(text, h.version, 8, "version");
  put_text(text, h.patient_id, 80, "patient");
  put_text(text, h.recording_id, 80, "recording");
  std::string date;
  put_two(date, h.start.day);
  date.push_back('.');
  put_two(date, h.start.month);
  date.push_back('.');
  put_two(date, h.start.year % 100);
  std::string time;
  put_two(time, h.start.hour);
  time.push_back('.');
  put_two(time, h.start.minute);
  time.push_back('.');
  put_two(time, h.start.second);
  put_text(text, date, 8, "startdate");
  put_text(text, time, 8, "starttime");
  put_text(text, std::to_string(kFixedHeaderBytes + kSignalHeaderBytes * ns), 8,
           "header bytes");
  put_text(text, h.reserved, 44, "reserved");
  put_text(text, format_number(h.record_count), 8, "record count");
  put_text(text, format_number(h.record_duration, 8), 8, "record duration");
  put_text(text, std::to_string(ns), 4, "signal count");
  for (const auto& s : h.signals) put_text(text, s.label, 16, "label");
  for (const auto& s : h.signals) put_text(text, s.transducer, 80, "transducer");
  for (const auto& s : h.signals) put_text(text, s.physical_dimension, 8, "dimension");
  for (const auto& s : h.signals) put_text(text, format_number(s.physical_min, 8), 8, "physical min");
  for (const auto& s : h.signals) put_text(text, format_number(s.physical_max, 8), 8, "physical max");
  for (const auto& s : h.signals) put_text(text, std::to_string(s.digital_min), 8, "digital min");
  for (const auto& s : h.signals) put_text(text, std::to_string(s.digital_max), 8, "digital max");
  for (const auto& s : h.signals) put_text(text, s.prefiltering, 80, "prefiltering");
  for (const auto& s : h.signals) put_text(text, std::to_string(s.samples_per_record), 8, "samples per record");
  for (const auto& s : h.signals) put_text(text, s.reserved, 32, "signal reserved");

  std::vector<std::byte> out(text.size() +
                             2 * static_cast<std::size_t>(h.record_count) *
                                 static_cast<std::size_t>(h.record_samples()));
  std::transform(text.begin(), text.end(), out.begin(),
                 [](char c) { return static_cast<std::byte>(c); });
  std::byte* p = out.data() + text.size();
  for (long r = 0; r < h.record_count; ++r) {
    for (std::size_t i = 0; i < ns; ++i) {
      const auto spr = static_cast<std::size_t>(h.signals[i].samples_per_record);
      for (std::size_t k = 0; k < spr; ++k) {
        const auto v = static_cast<std::uint16_t>(file.digital[i][static_cast<std::size_t>(r) * spr + k]);
        *p++ = static_cast<std::byte>(v & 0xff);
        *p++ = static_cast<std::byte>(v >> 8);
      }
    }
  }
  return out;
}

void write_edf(const std::filesystem::path& path, const EdfFile& file) {
  const auto bytes = serialize_edf(file);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

std::vector<double> calibrate(std::span<const std::int16_t> digital,
                              const SignalHeader& signal) {
  if (signal.digital_min == signal.digital_max) {
    throw Error(Errc::DegenerateCalibration, "digital_min == digital_max for '" +
                                                 signal.label + "'");
  }
  const double dmin = signal.digital_min;
  const double dmax = signal.digital_max;
  const double gain = (signal.physical_max - signal.physical_min) / (dmax - dmin);
  std::vector<double> out(digital.size());
  std::size_t clamped = 0;
  for (std::size_t i = 0; i < digital.size(); ++i) {
    double d = digital[i];
    if (d < dmin || d > dmax) {
      d = std::clamp(d, dmin, dmax);
      ++clamped;
    }
    out[i] = signal.physical_min + (d - dmin) * gain;
  }
  if (clamped > 0) {
    spdlog::warn("{}: clamped {} samples outside the digital range [{}, {}]",
                 signal.label, clamped, signal.digital_min, signal.digital_max);
  }
  return out;
}

EegRecording extract_recording(const EdfFile& file, std::string_view channel,
                               std::string subject_id) {
  const std::size_t index = file.signal_index(channel);
  const auto& signal = file.header.signals[index];
  EegRecording rec;
  rec.subject_id = std::move(subject_id);
  rec.channel_name = signal.label;
  rec.sample_rate = file.header.sample_rate(static_cast<int>(index));
  rec.samples = calibrate(file.digital[index], signal);
  rec.start = file.header.start;
  return rec;
}

}  // namespace msdan::edf
