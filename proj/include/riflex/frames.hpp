#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "riflex/errors.hpp"
#include "riflex/norepeat.hpp"

#include <json.hpp>

namespace riflex {

namespace detail {

// Skips PNM whitespace and '#' comment lines between header tokens.
inline int pnm_token(std::istream& in) {
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (!std::isspace(c)) {
      break;
    }
    c = in.get();
  }
  if (c == EOF) throw DataError("truncated PNM header");
  std::string token;
  while (c != EOF && !std::isspace(c)) {
    token.push_back(static_cast<char>(c));
    c = in.get();
  }
  try {
    return std::stoi(token);
  } catch (const std::exception&) {
    throw DataError("bad PNM header token '" + token + "'");
  }
}

struct PnmImage {
  std::size_t width = 0, height = 0, channels = 0;
  std::vector<float> pixels;  // interleaved, row-major
};

inline PnmImage read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  char magic[2];
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || (magic[1] != '5' && magic[1] != '6'))
    throw DataError("'" + path.string() + "' is not a binary PGM (P5) or PPM (P6) file");
  PnmImage img;
  img.channels = magic[1] == '5' ? 1 : 3;
  img.width = static_cast<std::size_t>(pnm_token(in));
  img.height = static_cast<std::size_t>(pnm_token(in));
  const int maxval = pnm_token(in);
  if (maxval < 1 || maxval > 255)
    throw DataError("'" + path.string() + "': only 8-bit PNM data is supported (maxval " +
                    std::to_string(maxval) + ")");
  if (img.width == 0 || img.height == 0) throw DataError("'" + path.string() + "': empty image");
  const std::size_t count = img.width * img.height * img.channels;
  std::vector<unsigned char> raw(count);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(count));
  if (static_cast<std::size_t>(in.gcount()) != count)
    throw DataError("'" + path.string() + "': truncated pixel data");
  img.pixels.assign(raw.begin(), raw.end());
  return img;
}

}  // namespace detail

/// Writes an 8-bit binary PGM (1 channel) or PPM (3 channels). Values are
/// clamped to [0, 255] and rounded.
inline void write_pnm(const std::filesystem::path& path, std::size_t width, std::size_t height,
                      std::size_t channels, const std::vector<float>& pixels) {
  if (channels != 1 && channels != 3)
    throw DataError("write_pnm: channels must be 1 (PGM) or 3 (PPM)");
  if (pixels.size() != width * height * channels)
    throw DataError("write_pnm: pixel count does not match dimensions");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << (channels == 1 ? "P5" : "P6") << "\n" << width << " " << height << "\n255\n";
  std::vector<unsigned char> raw(pixels.size());
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    const float v = std::clamp(pixels[i], 0.0f, 255.0f);
    raw[i] = static_cast<unsigned char>(v + 0.5f);
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
}

/// Raw float container: the magic line "RFLX1", one JSON header line
/// {"height":..,"width":..,"channels":..,"frames":..,"dtype":"f32le"}, then
/// frames*height*width*channels packed little-endian float32 values,
/// channel-interleaved within each frame.
inline FrameSequence read_rflx(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::string magic;
  std::getline(in, magic);
  if (magic != "RFLX1") throw DataError("'" + path.string() + "' is not an RFLX1 container");
  std::string header_line;
  std::getline(in, header_line);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_line);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("'" + path.string() + "': bad RFLX1 header: " + e.what());
  }
  for (const char* key : {"height", "width", "channels", "frames", "dtype"})
    if (!header.contains(key))
      throw DataError("'" + path.string() + "': RFLX1 header missing '" + key + "'");
  if (header["dtype"] != "f32le")
    throw DataError("'" + path.string() + "': unsupported dtype (expected f32le)");

  FrameSequence seq;
  seq.height = header["height"].get<std::size_t>();
  seq.width = header["width"].get<std::size_t>();
  seq.channels = header["channels"].get<std::size_t>();
  const auto frame_count = header["frames"].get<std::size_t>();
  const std::size_t frame_size = seq.height * seq.width * seq.channels;
  if (frame_size == 0 || frame_count == 0)
    throw DataError("'" + path.string() + "': empty RFLX1 container");

  seq.frames.reserve(frame_count);
  std::vector<unsigned char> raw(frame_size * 4);
  for (std::size_t t = 0; t < frame_count; ++t) {
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size())
      throw DataError("'" + path.string() + "': truncated at frame " + std::to_string(t));
    std::vector<float> frame(frame_size);
    for (std::size_t i = 0; i < frame_size; ++i) {
      std::uint32_t bits = static_cast<std::uint32_t>(raw[4 * i]) |
                           static_cast<std::uint32_t>(raw[4 * i + 1]) << 8 |
                           static_cast<std::uint32_t>(raw[4 * i + 2]) << 16 |
                           static_cast<std::uint32_t>(raw[4 * i + 3]) << 24;
      std::memcpy(&frame[i], &bits, 4);
    }
    seq.frames.push_back(std::move(frame));
  }
  seq.validate();
  return seq;
}

inline void write_rflx(const std::filesystem::path& path, const FrameSequence& seq) {
  seq.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << "RFLX1\n";
  out << "{\"height\":" << seq.height << ",\"width\":" << seq.width
      << ",\"channels\":" << seq.channels << ",\"frames\":" << seq.frame_count()
      << ",\"dtype\":\"f32le\"}\n";
  std::vector<unsigned char> raw(seq.frame_size() * 4);
  for (const auto& frame : seq.frames) {
    for (std::size_t i = 0; i < frame.size(); ++i) {
      std::uint32_t bits;
      std::memcpy(&bits, &frame[i], 4);
      raw[4 * i] = static_cast<unsigned char>(bits & 0xff);
      raw[4 * i + 1] = static_cast<unsigned char>(bits >> 8 & 0xff);
      raw[4 * i + 2] = static_cast<unsigned char>(bits >> 16 & 0xff);
      raw[4 * i + 3] = static_cast<unsigned char>(bits >> 24 & 0xff);
    }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  }
}

/// Loads a directory of numbered .pgm/.ppm frames, ordered by the number
/// embedded in each filename.
inline FrameSequence read_frame_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir))
    throw DataError("'" + dir.string() + "' is not a directory");
  std::vector<std::pair<long long, std::filesystem::path>> entries;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension().string();
    if (ext != ".pgm" && ext != ".ppm") continue;
    const std::string stem = entry.path().stem().string();
    std::string digits;
    for (char c : stem)
      if (std::isdigit(static_cast<unsigned char>(c))) digits.push_back(c);
    if (digits.empty())
      throw DataError("frame '" + entry.path().string() + "' has no number in its name");
    entries.emplace_back(std::stoll(digits), entry.path());
  }
  if (entries.empty()) throw DataError("no .pgm/.ppm frames in '" + dir.string() + "'");
  std::sort(entries.begin(), entries.end());

  FrameSequence seq;
  for (const auto& [index, path] : entries) {
    auto img = detail::read_pnm(path);
    if (seq.frames.empty()) {
      seq.height = img.height;
      seq.width = img.width;
      seq.channels = img.channels;
    } else if (img.height != seq.height || img.width != seq.width ||
               img.channels != seq.channels) {
      throw DataError("frame '" + path.string() + "' dimensions differ from the first frame");
    }
    seq.frames.push_back(std::move(img.pixels));
  }
  seq.validate();
  return seq;
}

/// Dispatches on the path: directories hold numbered PNM frames, regular
/// files are RFLX1 containers.
inline FrameSequence read_frames(const std::filesystem::path& path) {
  if (std::filesystem::is_directory(path)) return read_frame_dir(path);
  return read_rflx(path);
}

}  // namespace riflex
