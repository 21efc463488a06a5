#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace psychoforge {

// Bad user input or malformed data. The CLI maps this to exit code 1;
// everything else that escapes maps to 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// ---------------------------------------------------------------------------
// Hashing and seed derivation
// ---------------------------------------------------------------------------

constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Every stage/substream derives its seed from the root seed and a name, so
// reordering stages or adding streams never silently perturbs another one.
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view name) {
  return splitmix64(root ^ fnv1a64(name));
}

inline std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

// ---------------------------------------------------------------------------
// Rng: mt19937_64 with hand-rolled distributions. libstdc++'s distribution
// objects are not bit-stable across library versions; these are.
// ---------------------------------------------------------------------------

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // [0, 1)
  double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller, no caching of the second deviate.
  double normal(double mean, double sd) {
    double u1 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    double u2 = uniform();
    double z = std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * 3.14159265358979323846 * u2);
    return mean + sd * z;
  }

  int bernoulli(double p) { return uniform() < p ? 1 : 0; }

  // Inclusive range, rejection sampling for exact uniformity.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw std::logic_error("Rng::below(0)");
    std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t v;
    do {
      v = eng_();
    } while (v >= limit);
    return v % n;
  }

  std::size_t index(std::size_t n) { return static_cast<std::size_t>(below(n)); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  // k distinct indices from [0, n) via partial Fisher-Yates, sorted output.
  std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k) {
    if (k > n) throw std::logic_error("Rng::sample_indices k > n");
    std::vector<std::size_t> pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    for (std::size_t i = 0; i < k; ++i) {
      std::size_t j = i + index(n - i);
      std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    std::sort(pool.begin(), pool.end());
    return pool;
  }

 private:
  std::mt19937_64 eng_;
};

// ---------------------------------------------------------------------------
// UTF-8 and codepoint classes
// ---------------------------------------------------------------------------

// Decodes the codepoint at byte offset i, advancing i. Invalid bytes are
// consumed one at a time and returned as their byte value (Latin-1 fallback),
// so classification is total on arbitrary input.
inline char32_t next_codepoint(std::string_view s, std::size_t& i) {
  unsigned char b0 = static_cast<unsigned char>(s[i]);
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  int len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    ++i;
    return b0;
  }
  if (i + static_cast<std::size_t>(len) > s.size()) {
    ++i;
    return b0;
  }
  for (int k = 1; k < len; ++k) {
    unsigned char b = static_cast<unsigned char>(s[i + static_cast<std::size_t>(k)]);
    if ((b & 0xC0) != 0x80) {
      ++i;
      return b0;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  i += static_cast<std::size_t>(len);
  return cp;
}

inline std::vector<char32_t> codepoints(std::string_view s) {
  std::vector<char32_t> out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) out.push_back(next_codepoint(s, i));
  return out;
}

inline std::size_t codepoint_count(std::string_view s) {
  std::size_t i = 0, n = 0;
  while (i < s.size()) {
    next_codepoint(s, i);
    ++n;
  }
  return n;
}

inline bool is_space_cp(char32_t c) {
  switch (c) {
    case U' ': case U'\t': case U'\n': case U'\r': case U'\f': case U'\v':
    case 0x0085: case 0x00A0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return c >= 0x2000 && c <= 0x200A;
  }
}

inline bool is_digit_cp(char32_t c) {
  if (c >= U'0' && c <= U'9') return true;
  if (c >= 0x0660 && c <= 0x0669) return true;  // Arabic-Indic
  if (c >= 0x06F0 && c <= 0x06F9) return true;  // extended Arabic-Indic
  if (c >= 0x0966 && c <= 0x096F) return true;  // Devanagari
  if (c >= 0xFF10 && c <= 0xFF19) return true;  // fullwidth
  return false;
}

// Fixed table: + − - × * / ÷ = < > ≤ ≥ √ ^ % ±
inline bool is_math_symbol_cp(char32_t c) {
  switch (c) {
    case U'+': case U'-': case U'*': case U'/': case U'=':
    case U'<': case U'>': case U'^': case U'%':
    case 0x2212: case 0x00D7: case 0x00F7: case 0x2264: case 0x2265:
    case 0x221A: case 0x00B1:
      return true;
    default:
      return false;
  }
}

inline bool is_letter_cp(char32_t c) {
  if ((c >= U'A' && c <= U'Z') || (c >= U'a' && c <= U'z')) return true;
  if (c >= 0x00C0 && c <= 0x00FF && c != 0x00D7 && c != 0x00F7) return true;
  if (c >= 0x0100 && c <= 0x024F) return true;  // Latin Extended A/B
  if (c >= 0x0370 && c <= 0x03FF) return true;  // Greek block
  return false;
}

inline bool is_alnum_cp(char32_t c) { return is_letter_cp(c) || is_digit_cp(c); }

// ---------------------------------------------------------------------------
// Strings
// ---------------------------------------------------------------------------

inline std::string lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (static_cast<unsigned char>(s[b]) <= ' ')) ++b;
  while (e > b && (static_cast<unsigned char>(s[e - 1]) <= ' ')) --e;
  return std::string(s.substr(b, e - b));
}

inline std::vector<std::string> split(std::string_view s, char delim) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == delim) {
      out.emplace_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

inline bool contains_ci(std::string_view haystack, std::string_view needle) {
  if (needle.empty()) return true;
  std::string h = lower_ascii(haystack), n = lower_ascii(needle);
  return h.find(n) != std::string::npos;
}

// ---------------------------------------------------------------------------
// CSV (minimal RFC-style quoting; our ids rarely need it but users' might)
// ---------------------------------------------------------------------------

inline std::string csv_escape(std::string_view field) {
  bool needs = field.find_first_of(",\"\n\r") != std::string_view::npos;
  if (!needs) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += '"';
  return out;
}

inline std::string csv_join(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += csv_escape(fields[i]);
  }
  return out;
}

inline std::vector<std::string> parse_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  std::size_t i = 0;
  while (i < line.size()) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          i += 2;
        } else {
          quoted = false;
          ++i;
        }
      } else {
        cur += c;
        ++i;
      }
    } else if (c == '"' && cur.empty()) {
      quoted = true;
      ++i;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
      ++i;
    } else {
      cur += c;
      ++i;
    }
  }
  out.push_back(cur);
  return out;
}

// ---------------------------------------------------------------------------
// File I/O
// ---------------------------------------------------------------------------

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::filesystem::path& path,
                            std::string_view content) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw std::runtime_error("short write: " + path.string());
}

// Splits on '\n', tolerating a trailing newline and stripping '\r'.
inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::string text = read_text_file(path);
  std::vector<std::string> lines = split(text, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  for (std::string& l : lines)
    if (!l.empty() && l.back() == '\r') l.pop_back();
  return lines;
}

inline std::uint64_t file_content_hash(const std::filesystem::path& path) {
  return fnv1a64(read_text_file(path));
}

// ---------------------------------------------------------------------------
// Number formatting (snprintf for byte-stable artifacts)
// ---------------------------------------------------------------------------

inline std::string fmt_g(double v, int sig = 17) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", sig, v);
  return std::string(buf);
}

inline std::string fmt_fixed(double v, int prec) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return std::string(buf);
}

inline double parse_double(std::string_view s, std::string_view what) {
  std::string t = trim(s);
  if (t.empty()) throw ValidationError(std::string("empty number for ") + std::string(what));
  char* end = nullptr;
  double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size())
    throw ValidationError("not a number: '" + t + "' for " + std::string(what));
  return v;
}

inline long long parse_int(std::string_view s, std::string_view what) {
  std::string t = trim(s);
  if (t.empty()) throw ValidationError(std::string("empty integer for ") + std::string(what));
  char* end = nullptr;
  long long v = std::strtoll(t.c_str(), &end, 10);
  if (end != t.c_str() + t.size())
    throw ValidationError("not an integer: '" + t + "' for " + std::string(what));
  return v;
}

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace psychoforge
