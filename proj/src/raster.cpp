#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "unet/io.hpp"
#include "unet/weightmap.hpp"

namespace unet {

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::string_view bytes) : bytes_(bytes) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::size_t number(const char* what) {
    skip_space_and_comments();
    std::size_t start = pos_;
    std::size_t v = 0;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      v = v * 10 + static_cast<std::size_t>(bytes_[pos_] - '0');
      if (v > 1'000'000'000) throw FormatError(std::string("pgm: ") + what + " too large");
      ++pos_;
    }
    if (pos_ == start) throw FormatError(std::string("pgm: missing ") + what);
    return v;
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_pgm(const RasterFile& f, const std::string& comment) {
  if (f.maxval < 1 || f.maxval > 65535) throw PreconditionError("pgm: maxval must be in [1, 65535]");
  if (f.samples.size() != f.width * f.height) throw PreconditionError("pgm: sample count does not match size");
  std::ostringstream os;
  os << "P5\n";
  if (!comment.empty()) {
    std::istringstream lines(comment);
    std::string line;
    while (std::getline(lines, line)) os << "# " << line << "\n";
  }
  os << f.width << " " << f.height << "\n" << f.maxval << "\n";
  std::string out = os.str();
  const bool wide = f.maxval > 255;
  out.reserve(out.size() + f.samples.size() * (wide ? 2 : 1));
  for (std::uint16_t s : f.samples) {
    if (s > f.maxval) throw PreconditionError("pgm: sample exceeds maxval");
    if (wide) out.push_back(static_cast<char>(s >> 8));
    out.push_back(static_cast<char>(s & 0xff));
  }
  return out;
}

RasterFile decode_pgm(std::string_view bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') throw FormatError("pgm: missing P5 magic");
  HeaderReader r(bytes);
  r.advance(2);
  RasterFile f;
  f.width = r.number("width");
  f.height = r.number("height");
  const std::size_t maxval = r.number("maxval");
  if (maxval < 1 || maxval > 65535) throw FormatError("pgm: maxval out of range");
  f.maxval = static_cast<std::uint32_t>(maxval);
  if (r.pos() >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[r.pos()]))) {
    throw FormatError("pgm: missing whitespace after maxval");
  }
  r.advance(1);
  const bool wide = f.maxval > 255;
  const std::size_t need = f.width * f.height * (wide ? 2 : 1);
  if (bytes.size() - r.pos() < need) throw FormatError("pgm: truncated sample data");
  f.samples.resize(f.width * f.height);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + r.pos());
  for (std::size_t i = 0; i < f.samples.size(); ++i) {
    f.samples[i] = wide ? static_cast<std::uint16_t>((p[2 * i] << 8) | p[2 * i + 1]) : p[i];
    if (f.samples[i] > f.maxval) throw FormatError("pgm: sample " + std::to_string(i) + " exceeds maxval");
  }
  return f;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write failed for " + path.string());
}

RasterFile read_pgm(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = read_file(path);
  return decode_pgm(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

void write_pgm(const std::filesystem::path& path, const RasterFile& file, const std::string& comment) {
  const std::string s = encode_pgm(file, comment);
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

Image to_image(const RasterFile& f) {
  Image img(f.height, f.width);
  for (std::size_t i = 0; i < img.size(); ++i) img.data[i] = static_cast<double>(f.samples[i]) / f.maxval;
  return img;
}

InstanceMap to_instances(const RasterFile& f) {
  InstanceMap m(f.height, f.width);
  for (std::size_t i = 0; i < m.size(); ++i) m.data[i] = f.samples[i];
  return m;
}

Mask to_mask(const RasterFile& f) {
  Mask m(f.height, f.width);
  for (std::size_t i = 0; i < m.size(); ++i) m.data[i] = f.samples[i] != 0;
  return m;
}

RasterFile from_image(const Image& image) {
  RasterFile f{image.width, image.height, 255, std::vector<std::uint16_t>(image.size())};
  for (std::size_t i = 0; i < image.size(); ++i) {
    f.samples[i] = static_cast<std::uint16_t>(std::lround(std::clamp(image.data[i], 0.0, 1.0) * 255.0));
  }
  return f;
}

RasterFile from_mask(const Mask& mask) {
  RasterFile f{mask.width, mask.height, 255, std::vector<std::uint16_t>(mask.size())};
  for (std::size_t i = 0; i < mask.size(); ++i) f.samples[i] = mask.data[i] ? 255 : 0;
  return f;
}

RasterFile from_instances(const InstanceMap& instances) {
  RasterFile f{instances.width, instances.height, 65535, std::vector<std::uint16_t>(instances.size())};
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (instances.data[i] > 65535) throw PreconditionError("instance id exceeds 16 bits");
    f.samples[i] = static_cast<std::uint16_t>(instances.data[i]);
  }
  return f;
}

RasterFile from_weights(const WeightMap& weights) {
  RasterFile f{weights.width, weights.height, 255, std::vector<std::uint16_t>(weights.size())};
  for (std::size_t i = 0; i < weights.size(); ++i) f.samples[i] = weight_to_byte(weights.data[i]);
  return f;
}

}  // namespace unet
