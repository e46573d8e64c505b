// Copyright 2026 The bcnet Authors. All Rights Reserved.
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

#include <png.h>
// jpeglib.h needs size_t and FILE declared first.
#include <cstdio>
#include <jpeglib.h>

#include <cctype>
#include <csetjmp>
#include <cstring>
#include <fstream>
#include <string>

#include "bcnet/error.hpp"
#include "bcnet/image.hpp"

namespace bcnet {

RawFrame::RawFrame(std::size_t h, std::size_t w, std::vector<std::uint8_t> pixels)
    : height(h), width(w), rgb(std::move(pixels)) {
  if (h == 0 || w == 0 || rgb.size() != h * w * 3)
    throw ImageError("RGB frame " + std::to_string(h) + "x" + std::to_string(w) +
                     " needs " + std::to_string(h * w * 3) + " bytes, got " +
                     std::to_string(rgb.size()));
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
}

namespace {

RawFrame decode_png(std::span<const std::uint8_t> bytes, const std::string& source) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
    throw ImageError(source + ": " + image.message);
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, pixels.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw ImageError(source + ": " + msg);
  }
  return RawFrame(image.height, image.width, std::move(pixels));
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

RawFrame decode_jpeg(std::span<const std::uint8_t> bytes, const std::string& source) {
  jpeg_decompress_struct cinfo;
  JpegErrorManager err;
  std::vector<std::uint8_t> pixels;
  std::size_t height = 0, width = 0;
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw ImageError(source + ": " + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  height = cinfo.output_height;
  width = cinfo.output_width;
  pixels.resize(height * width * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = pixels.data() + static_cast<std::size_t>(cinfo.output_scanline) * width * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return RawFrame(height, width, std::move(pixels));
}

RawFrame decode_ppm(std::span<const std::uint8_t> bytes, const std::string& source) {
  std::size_t pos = 2;
  auto next_number = [&]() -> std::size_t {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
    std::size_t v = 0, digits = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos++] - '0');
      if (++digits > 9) throw ImageError(source + ": PPM header value too large");
    }
    if (digits == 0) throw ImageError(source + ": malformed PPM header");
    return v;
  };
  const std::size_t w = next_number(), h = next_number(), maxval = next_number();
  if (maxval != 255) throw ImageError(source + ": only 8-bit PPM is supported");
  ++pos;  // single whitespace before the raster
  if (w == 0 || h == 0 || bytes.size() < pos || bytes.size() - pos < w * h * 3)
    throw ImageError(source + ": truncated PPM raster");
  return RawFrame(h, w, std::vector<std::uint8_t>(bytes.begin() + pos,
                                                  bytes.begin() + pos + w * h * 3));
}

}  // namespace

RawFrame decode_image(std::span<const std::uint8_t> bytes, std::string_view source) {
  const std::string src(source);
  static const std::uint8_t kPng[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPng, 8) == 0) return decode_png(bytes, src);
  if (bytes.size() >= 3 && bytes[0] == 0xff && bytes[1] == 0xd8 && bytes[2] == 0xff)
    return decode_jpeg(bytes, src);
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') return decode_ppm(bytes, src);
  throw ImageError(src + ": unrecognized image format (expected PNG, JPEG, or PPM)");
}

RawFrame load_image(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return decode_image(bytes, path.string());
}

void save_png(const RawFrame& frame, const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(frame.width);
  image.height = static_cast<png_uint_32>(frame.height);
  image.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, frame.rgb.data(), 0, nullptr))
    throw IoError("cannot write " + path.string() + ": " + image.message);
}

}  // namespace bcnet
