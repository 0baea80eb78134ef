// NPY version 1.0 subset: little-endian float32/float64, C order.

#include "kann/errors.hpp"
#include "kann/state_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace kann {
namespace {

constexpr char kMagic[] = "\x93NUMPY";
constexpr std::size_t kMagicLen = 6;
constexpr std::size_t kPreambleLen = kMagicLen + 2 + 2;
constexpr std::size_t kAlignment = 64;

std::string os_detail() { return std::strerror(errno); }

// Minimal reader for the Python literal dict numpy writes as header.
class HeaderParser {
public:
  explicit HeaderParser(std::string_view text) : text_(text) {}

  std::map<std::string, std::string> parse() {
    std::map<std::string, std::string> out;
    skip_ws();
    expect('{', "header");
    while (true) {
      skip_ws();
      if (peek() == '}') {
        ++pos_;
        break;
      }
      const std::string key = string_literal();
      skip_ws();
      expect(':', key);
      skip_ws();
      out[key] = value(key);
      skip_ws();
      if (peek() == ',') {
        ++pos_;
        continue;
      }
      skip_ws();
      expect('}', "header");
      break;
    }
    return out;
  }

private:
  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
  }

  void expect(char c, const std::string &field) {
    if (peek() != c)
      throw FormatError(field, std::string("npy header: expected '") + c + "' near offset " +
                                   std::to_string(pos_));
    ++pos_;
  }

  std::string string_literal() {
    const char quote = peek();
    if (quote != '\'' && quote != '"')
      throw FormatError("header", "npy header: expected a quoted key near offset " +
                                      std::to_string(pos_));
    ++pos_;
    const auto end = text_.find(quote, pos_);
    if (end == std::string_view::npos)
      throw FormatError("header", "npy header: unterminated string");
    std::string s(text_.substr(pos_, end - pos_));
    pos_ = end + 1;
    return s;
  }

  // Returns strings unquoted, tuples and bare words verbatim.
  std::string value(const std::string &field) {
    const char c = peek();
    if (c == '\'' || c == '"')
      return string_literal();
    if (c == '(') {
      const auto end = text_.find(')', pos_);
      if (end == std::string_view::npos)
        throw FormatError(field, "npy header: unterminated tuple for '" + field + "'");
      std::string s(text_.substr(pos_, end - pos_ + 1));
      pos_ = end + 1;
      return s;
    }
    const auto start = pos_;
    while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
                                   text_[pos_] == '_'))
      ++pos_;
    if (start == pos_)
      throw FormatError(field, "npy header: unreadable value for '" + field + "'");
    return std::string(text_.substr(start, pos_ - start));
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

std::vector<std::size_t> parse_shape(const std::string &tuple) {
  std::vector<std::size_t> shape;
  std::string inner = tuple.substr(1, tuple.size() - 2);
  std::stringstream ss(inner);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t b = 0;
    while (b < item.size() && std::isspace(static_cast<unsigned char>(item[b])))
      ++b;
    std::size_t e = item.size();
    while (e > b && std::isspace(static_cast<unsigned char>(item[e - 1])))
      --e;
    if (b == e)
      continue;
    const std::string digits = item.substr(b, e - b);
    for (char ch : digits) {
      if (!std::isdigit(static_cast<unsigned char>(ch)))
        throw FormatError("shape", "npy header: invalid shape entry '" + digits + "'");
    }
    shape.push_back(static_cast<std::size_t>(std::stoull(digits)));
  }
  return shape;
}

template <typename T> T from_little_endian(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
  return v;
}

} // namespace

NpyArray read_npy(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open '" + path.string() + "': " + os_detail());

  char preamble[kPreambleLen];
  in.read(preamble, kPreambleLen);
  if (in.gcount() < static_cast<std::streamsize>(kMagicLen) ||
      std::memcmp(preamble, kMagic, kMagicLen) != 0)
    throw FormatError("magic", "'" + path.string() + "': not an NPY file (bad magic)");
  if (in.gcount() != static_cast<std::streamsize>(kPreambleLen))
    throw FormatError("version", "'" + path.string() + "': truncated NPY preamble");

  const auto major = static_cast<unsigned char>(preamble[6]);
  const auto minor = static_cast<unsigned char>(preamble[7]);
  if (major != 1 || minor != 0)
    throw FormatError("version", "'" + path.string() + "': unsupported NPY version " +
                                     std::to_string(major) + "." + std::to_string(minor) +
                                     " (only 1.0)");

  const std::size_t header_len = static_cast<unsigned char>(preamble[8]) |
                                 (static_cast<std::size_t>(static_cast<unsigned char>(preamble[9])) << 8);
  std::string header(header_len, '\0');
  in.read(header.data(), static_cast<std::streamsize>(header_len));
  if (in.gcount() != static_cast<std::streamsize>(header_len))
    throw FormatError("header", "'" + path.string() + "': truncated NPY header");

  const auto dict = HeaderParser(header).parse();
  const auto get = [&](const char *key) -> const std::string & {
    const auto it = dict.find(key);
    if (it == dict.end())
      throw FormatError(key, "'" + path.string() + "': NPY header lacks '" + key + "'");
    return it->second;
  };

  const std::string &descr = get("descr");
  std::size_t item_size = 0;
  if (descr == "<f8")
    item_size = 8;
  else if (descr == "<f4")
    item_size = 4;
  else
    throw FormatError("descr", "'" + path.string() + "': unsupported dtype '" + descr +
                                   "' (expected '<f4' or '<f8')");

  const std::string &order = get("fortran_order");
  if (order != "False")
    throw FormatError("fortran_order", "'" + path.string() + "': fortran_order must be False, got " + order);

  const std::string &shape_text = get("shape");
  if (shape_text.size() < 2 || shape_text.front() != '(')
    throw FormatError("shape", "'" + path.string() + "': shape must be a tuple");

  NpyArray out;
  out.shape = parse_shape(shape_text);
  std::size_t count = 1;
  for (auto d : out.shape)
    count *= d;

  std::vector<char> raw(count * item_size);
  in.read(raw.data(), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size())
    throw FormatError("data", "'" + path.string() + "': expected " + std::to_string(count) +
                                  " values, file is truncated");
  in.peek();
  if (!in.eof())
    throw FormatError("data", "'" + path.string() + "': trailing bytes after array data");

  out.data.resize(count);
  if (item_size == 8) {
    for (std::size_t i = 0; i < count; ++i) {
      std::uint64_t bits;
      std::memcpy(&bits, raw.data() + i * 8, 8);
      out.data[i] = std::bit_cast<double>(from_little_endian(bits));
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      std::uint32_t bits;
      std::memcpy(&bits, raw.data() + i * 4, 4);
      out.data[i] = static_cast<double>(std::bit_cast<float>(from_little_endian(bits)));
    }
  }
  return out;
}

void write_npy(const std::filesystem::path &path, std::span<const std::size_t> shape,
               std::span<const double> data) {
  std::size_t count = 1;
  for (auto d : shape)
    count *= d;
  if (count != data.size())
    throw DimensionError("write_npy: shape holds " + std::to_string(count) + " values, got " +
                         std::to_string(data.size()));

  std::string dict = "{'descr': '<f8', 'fortran_order': False, 'shape': (";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i)
      dict += ", ";
    dict += std::to_string(shape[i]);
  }
  if (shape.size() == 1)
    dict += ",";
  dict += "), }";
  const std::size_t unpadded = kPreambleLen + dict.size() + 1;
  const std::size_t padded = (unpadded + kAlignment - 1) / kAlignment * kAlignment;
  dict.append(padded - unpadded, ' ');
  dict += '\n';

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw IoError("cannot write '" + path.string() + "': " + os_detail());
  out.write(kMagic, kMagicLen);
  const char version[2] = {1, 0};
  out.write(version, 2);
  const char len[2] = {static_cast<char>(dict.size() & 0xff),
                       static_cast<char>((dict.size() >> 8) & 0xff)};
  out.write(len, 2);
  out.write(dict.data(), static_cast<std::streamsize>(dict.size()));

  std::vector<char> raw(data.size() * 8);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::uint64_t bits = from_little_endian(std::bit_cast<std::uint64_t>(data[i]));
    std::memcpy(raw.data() + i * 8, &bits, 8);
  }
  out.write(raw.data(), static_cast<std::streamsize>(raw.size()));
  out.flush();
  if (!out)
    throw IoError("write to '" + path.string() + "' failed: " + os_detail());
}

HiddenStateTensor load_tensor(const std::filesystem::path &path) {
  NpyArray a = read_npy(path);
  if (a.shape.size() != 3)
    throw FormatError("shape", "'" + path.string() + "': expected a 3-d (s, n, k) tensor, got " +
                                   std::to_string(a.shape.size()) + " dimensions");
  const std::size_t n = a.shape[1], k = a.shape[2];
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    if (!std::isfinite(a.data[i])) {
      const std::size_t s = i / (n * k), t = (i / k) % n, j = i % k;
      throw ValidationError("'" + path.string() + "': non-finite value at index (" +
                            std::to_string(s) + ", " + std::to_string(t) + ", " +
                            std::to_string(j) + ")");
    }
  }
  return HiddenStateTensor(a.shape[0], n, k, std::move(a.data));
}

void save_tensor(const HiddenStateTensor &t, const std::filesystem::path &path) {
  const std::size_t shape[3] = {t.samples(), t.steps(), t.dim()};
  write_npy(path, shape, t.data());
}

RealMatrix load_matrix(const std::filesystem::path &path) {
  const NpyArray a = read_npy(path);
  if (a.shape.size() != 2)
    throw FormatError("shape", "'" + path.string() + "': expected a 2-d matrix, got " +
                                   std::to_string(a.shape.size()) + " dimensions");
  const auto rows = static_cast<Eigen::Index>(a.shape[0]);
  const auto cols = static_cast<Eigen::Index>(a.shape[1]);
  RealMatrix m = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      a.data.data(), rows, cols);
  require_finite(m, path.string());
  return m;
}

void save_matrix(const RealMatrix &m, const std::filesystem::path &path) {
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> row_major = m;
  const std::size_t shape[2] = {static_cast<std::size_t>(m.rows()),
                                static_cast<std::size_t>(m.cols())};
  write_npy(path, shape, std::span<const double>(row_major.data(), static_cast<std::size_t>(m.size())));
}

RealVector load_vector(const std::filesystem::path &path) {
  const NpyArray a = read_npy(path);
  if (a.shape.size() != 1)
    throw FormatError("shape", "'" + path.string() + "': expected a 1-d vector, got " +
                                   std::to_string(a.shape.size()) + " dimensions");
  RealVector v = Eigen::Map<const RealVector>(a.data.data(), static_cast<Eigen::Index>(a.data.size()));
  require_finite(v, path.string());
  return v;
}

void save_vector(const RealVector &v, const std::filesystem::path &path) {
  const std::size_t shape[1] = {static_cast<std::size_t>(v.size())};
  write_npy(path, shape, std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
}

std::vector<std::uint8_t> load_mask(const std::filesystem::path &path, std::size_t samples,
                                    std::size_t steps) {
  const NpyArray a = read_npy(path);
  if (a.shape.size() != 2 || a.shape[0] != samples || a.shape[1] != steps)
    throw FormatError("shape", "'" + path.string() + "': mask must have shape (" +
                                   std::to_string(samples) + ", " + std::to_string(steps) + ")");
  std::vector<std::uint8_t> mask(a.data.size());
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    if (a.data[i] != 0.0 && a.data[i] != 1.0)
      throw ValidationError("'" + path.string() + "': mask entries must be 0 or 1");
    mask[i] = a.data[i] != 0.0;
  }
  return mask;
}

void save_mask(const HiddenStateTensor &t, const std::filesystem::path &path) {
  std::vector<double> values(t.samples() * t.steps());
  for (std::size_t s = 0; s < t.samples(); ++s)
    for (std::size_t i = 0; i < t.steps(); ++i)
      values[s * t.steps() + i] = t.valid(s, i) ? 1.0 : 0.0;
  const std::size_t shape[2] = {t.samples(), t.steps()};
  write_npy(path, shape, values);
}

} // namespace kann
