#include "m2n2/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>

#include <jpeglib.h>

#include "m2n2/error.hpp"

namespace m2n2 {
namespace {

bool is_png(std::span<const std::uint8_t> b) {
  static constexpr std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  return b.size() >= 8 && std::memcmp(b.data(), sig, 8) == 0;
}

bool is_jpeg(std::span<const std::uint8_t> b) { return b.size() >= 3 && b[0] == 0xFF && b[1] == 0xD8 && b[2] == 0xFF; }

Image8 decode_png(std::span<const std::uint8_t> bytes, int channels) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size()))
    throw FormatError(std::string("cannot decode PNG: ") + img.message);
  img.format = channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  Image8 out;
  out.height = static_cast<int>(img.height);
  out.width = static_cast<int>(img.width);
  out.channels = channels;
  out.data.resize(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, out.data.data(), 0, nullptr)) {
    const std::string msg = img.message;
    png_image_free(&img);
    throw FormatError("cannot decode PNG: " + msg);
  }
  return out;
}

struct JpegError {
  jpeg_error_mgr mgr;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_fail(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegError*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

Image8 decode_jpeg(std::span<const std::uint8_t> bytes, int channels) {
  jpeg_decompress_struct cinfo;
  JpegError err;
  cinfo.err = jpeg_std_error(&err.mgr);
  err.mgr.error_exit = jpeg_fail;
  Image8 out;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw FormatError(std::string("cannot decode JPEG: ") + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = channels == 1 ? JCS_GRAYSCALE : JCS_RGB;
  jpeg_start_decompress(&cinfo);
  out.height = static_cast<int>(cinfo.output_height);
  out.width = static_cast<int>(cinfo.output_width);
  out.channels = channels;
  out.data.resize(static_cast<std::size_t>(out.height) * out.width * channels);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = out.data.data() + static_cast<std::size_t>(cinfo.output_scanline) * out.width * channels;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return out;
}

}  // namespace

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Image8 decode_image(std::span<const std::uint8_t> bytes, int channels) {
  if (channels != 1 && channels != 3) throw ValidationError("channels must be 1 or 3");
  if (is_png(bytes)) return decode_png(bytes, channels);
  if (is_jpeg(bytes)) return decode_jpeg(bytes, channels);
  throw FormatError("unsupported image format (expected PNG or JPEG)");
}

Image8 read_image(const std::filesystem::path& path, int channels) { return decode_image(read_file(path), channels); }

std::vector<std::uint8_t> encode_png(const Image8& image) {
  if (image.data.size() != static_cast<std::size_t>(image.height) * image.width * image.channels)
    throw ValidationError("image buffer does not match its shape");
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width);
  img.height = static_cast<png_uint_32>(image.height);
  img.format = image.channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&img, nullptr, &size, 0, image.data.data(), 0, nullptr))
    throw IoError(std::string("cannot encode PNG: ") + img.message);
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&img, out.data(), &size, 0, image.data.data(), 0, nullptr))
    throw IoError(std::string("cannot encode PNG: ") + img.message);
  out.resize(size);
  return out;
}

void write_png(const Image8& image, const std::filesystem::path& path) {
  const auto bytes = encode_png(image);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

GuideImage to_guide(const Image8& rgb) {
  if (rgb.channels != 3) throw ValidationError("guide image must be RGB");
  std::vector<float> data(rgb.data.size());
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<float>(rgb.data[i]) / 255.0F;
  return GuideImage(rgb.height, rgb.width, std::move(data));
}

Image8 from_guide(const GuideImage& guide) {
  Image8 out{guide.height, guide.width, 3, std::vector<std::uint8_t>(guide.rgb.size())};
  for (std::size_t i = 0; i < guide.rgb.size(); ++i)
    out.data[i] = static_cast<std::uint8_t>(std::lround(std::clamp(guide.rgb[i], 0.0F, 1.0F) * 255.0F));
  return out;
}

Mask mask_from_image(const Image8& gray) {
  Mask m(gray.height, gray.width, 0);
  for (std::size_t i = 0; i < m.size(); ++i) {
    bool on = false;
    for (int c = 0; c < gray.channels; ++c) on = on || gray.data[i * gray.channels + c] != 0;
    m[i] = on ? 1 : 0;
  }
  return m;
}

Image8 mask_to_image(const Mask& mask) {
  Image8 out{mask.height(), mask.width(), 1, std::vector<std::uint8_t>(mask.size())};
  for (std::size_t i = 0; i < mask.size(); ++i) out.data[i] = mask[i] ? 255 : 0;
  return out;
}

Image8 float_to_gray(const FloatMap& map, float lo, float hi) {
  Image8 out{map.height(), map.width(), 1, std::vector<std::uint8_t>(map.size())};
  const float span = hi > lo ? hi - lo : 1.0F;
  for (std::size_t i = 0; i < map.size(); ++i) {
    const float t = std::clamp((map[i] - lo) / span, 0.0F, 1.0F);
    out.data[i] = static_cast<std::uint8_t>(std::lround(t * 255.0F));
  }
  return out;
}

Image8 resize_nearest(const Image8& image, int height, int width) {
  Image8 out{height, width, image.channels,
             std::vector<std::uint8_t>(static_cast<std::size_t>(height) * width * image.channels)};
  for (int r = 0; r < height; ++r) {
    const int sr = static_cast<int>(static_cast<std::int64_t>(r) * image.height / height);
    for (int c = 0; c < width; ++c) {
      const int sc = static_cast<int>(static_cast<std::int64_t>(c) * image.width / width);
      for (int ch = 0; ch < image.channels; ++ch)
        out.data[(static_cast<std::size_t>(r) * width + c) * image.channels + ch] =
            image.data[(static_cast<std::size_t>(sr) * image.width + sc) * image.channels + ch];
    }
  }
  return out;
}

}  // namespace m2n2
