#pragma once

#include <cstring>
#include <string>
#include <vector>

#include "hoi/common.hpp"

namespace hoi {

// Little binary buffer helpers shared by the sequence, track-state and
// checkpoint containers. Readers bounds-check every access and throw
// CorruptFile on truncation.
class BinWriter {
 public:
  void u32(uint32_t v) { raw(&v, sizeof v); }
  void u64(uint64_t v) { raw(&v, sizeof v); }
  void f64(double v) { raw(&v, sizeof v); }
  void str(const std::string& s) {
    u64(s.size());
    raw(s.data(), s.size());
  }
  void doubles(const double* p, size_t n) {
    u64(n);
    raw(p, n * sizeof(double));
  }
  void vecx(const VecX& v) { doubles(v.data(), static_cast<size_t>(v.size())); }
  void u32s(const std::vector<uint32_t>& v) {
    u64(v.size());
    raw(v.data(), v.size() * sizeof(uint32_t));
  }
  const std::string& buffer() const { return buf_; }

 private:
  void raw(const void* p, size_t n) { buf_.append(static_cast<const char*>(p), n); }
  std::string buf_;
};

class BinReader {
 public:
  explicit BinReader(const std::string& buf) : buf_(buf) {}

  uint32_t u32() { return get<uint32_t>(); }
  uint64_t u64() { return get<uint64_t>(); }
  double f64() { return get<double>(); }
  std::string str() {
    const uint64_t n = u64();
    check(n);
    std::string s(buf_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  std::vector<double> doubles() {
    const uint64_t n = u64();
    check(n * sizeof(double));
    std::vector<double> v(n);
    std::memcpy(v.data(), buf_.data() + pos_, n * sizeof(double));
    pos_ += n * sizeof(double);
    return v;
  }
  VecX vecx() {
    const auto d = doubles();
    return Eigen::Map<const VecX>(d.data(), static_cast<Eigen::Index>(d.size()));
  }
  std::vector<uint32_t> u32s() {
    const uint64_t n = u64();
    check(n * sizeof(uint32_t));
    std::vector<uint32_t> v(n);
    std::memcpy(v.data(), buf_.data() + pos_, n * sizeof(uint32_t));
    pos_ += n * sizeof(uint32_t);
    return v;
  }
  bool at_end() const { return pos_ == buf_.size(); }

 private:
  template <class T>
  T get() {
    check(sizeof(T));
    T v;
    std::memcpy(&v, buf_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  void check(uint64_t n) const {
    if (pos_ + n > buf_.size()) throw CorruptFile("container: truncated file");
  }
  const std::string& buf_;
  size_t pos_ = 0;
};

}  // namespace hoi
