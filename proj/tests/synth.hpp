#pragma once

// Shared builders for the test suites: small matrices, the planted-proxy
// generator, and filesystem helpers for locating repo files and scratch dirs.

#include <filesystem>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pfr/dataset.hpp"
#include "pfr/rng.hpp"

namespace synth {

// Column-major input, row-major matrix out. Ids double as source attributes,
// matching how numeric columns encode.
inline pfr::EncodedMatrix make_matrix(
    const std::vector<std::pair<std::string, std::vector<double>>>& cols) {
  pfr::EncodedMatrix m;
  m.n_rows = cols.empty() ? 0 : cols.front().second.size();
  for (const auto& [id, values] : cols) {
    if (values.size() != m.n_rows) throw std::logic_error("make_matrix: ragged columns");
    m.columns.push_back({id, id, std::nullopt});
  }
  m.values.resize(m.n_rows * m.columns.size());
  for (std::size_t r = 0; r < m.n_rows; ++r) {
    for (std::size_t c = 0; c < m.columns.size(); ++c) m.at(r, c) = cols[c].second[r];
  }
  return m;
}

inline pfr::SensitiveColumn make_sensitive(const std::string& name, std::vector<int> codes,
                                           std::vector<std::string> classes,
                                           const std::string& privileged) {
  pfr::SensitiveColumn col;
  col.spec.column = name;
  col.spec.classes = std::move(classes);
  col.spec.privileged_value = privileged;
  col.codes = std::move(codes);
  col.privileged_code = col.spec.class_index(privileged);
  return col;
}

struct PlantedProxy {
  pfr::EncodedMatrix scaled;   // columns f1, f2, f3
  std::vector<int> sensitive;  // P(s=1) = 0.3
};

// f1 and f2 are independent of s; f3 equals s with 5% of entries flipped.
// The loop must delete f3 and nothing else at the default tau.
inline PlantedProxy planted_proxy(std::size_t n = 2000, std::uint64_t seed = 41,
                                  double flip = 0.05) {
  pfr::Rng rng(seed);
  std::vector<double> f1(n), f2(n), f3(n);
  std::vector<int> s(n);
  for (std::size_t i = 0; i < n; ++i) {
    f1[i] = rng.next_unit();
    f2[i] = rng.next_unit();
    s[i] = rng.next_unit() < 0.3 ? 1 : 0;
    const int noisy = rng.next_unit() < flip ? 1 - s[i] : s[i];
    f3[i] = static_cast<double>(noisy);
  }
  PlantedProxy out;
  out.scaled = min_max_scale(make_matrix({{"f1", f1}, {"f2", f2}, {"f3", f3}}));
  out.sensitive = std::move(s);
  return out;
}

// Adds a second, weaker proxy f4 (flip rate 0.2) after f3. Lowering tau from
// loose to tight first claims f3, then f4: the workload-prefix fixture.
inline PlantedProxy planted_two_proxies(std::size_t n = 2000, std::uint64_t seed = 43) {
  pfr::Rng rng(seed);
  std::vector<double> f1(n), f3(n), f4(n);
  std::vector<int> s(n);
  for (std::size_t i = 0; i < n; ++i) {
    f1[i] = rng.next_unit();
    s[i] = rng.next_unit() < 0.3 ? 1 : 0;
    f3[i] = static_cast<double>(rng.next_unit() < 0.05 ? 1 - s[i] : s[i]);
    f4[i] = static_cast<double>(rng.next_unit() < 0.2 ? 1 - s[i] : s[i]);
  }
  PlantedProxy out;
  out.scaled = min_max_scale(make_matrix({{"f1", f1}, {"f3", f3}, {"f4", f4}}));
  out.sensitive = std::move(s);
  return out;
}

// Walks up from the working directory until `relative` exists; tests run from
// arbitrary build subdirectories.
inline std::string find_repo_file(const std::string& relative) {
  namespace fs = std::filesystem;
  fs::path dir = fs::current_path();
  for (int depth = 0; depth < 8; ++depth) {
    const fs::path candidate = dir / relative;
    if (fs::exists(candidate)) return candidate.string();
    if (!dir.has_parent_path() || dir.parent_path() == dir) break;
    dir = dir.parent_path();
  }
  throw std::runtime_error("find_repo_file: " + relative + " not found above cwd");
}

// Scratch directory removed on destruction.
class TempDir {
public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            (tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

private:
  std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) throw std::runtime_error("write_file: cannot write " + path);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_file: cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// A small mixed-type dataset with a planted group proxy, written as CSV for
// the experiment tests: numeric x1 independent of group g, numeric x2 echoing
// g with 10% flips, categorical job correlated with the target only.
inline std::string proxy_csv(std::size_t n = 400, std::uint64_t seed = 29) {
  pfr::Rng rng(seed);
  std::string csv = "x1,x2,job,g,y\n";
  for (std::size_t i = 0; i < n; ++i) {
    const int g = rng.next_unit() < 0.4 ? 1 : 0;
    const double x1 = rng.next_unit();
    const double x2 =
        (rng.next_unit() < 0.1 ? 1 - g : g) + 0.1 * rng.next_unit();
    const bool skilled = rng.next_unit() < (0.3 + 0.4 * x1);
    const int y = rng.next_unit() < (skilled ? 0.7 : 0.3) ? 1 : 0;
    csv += std::to_string(x1) + "," + std::to_string(x2) + "," +
           (skilled ? "skilled" : "manual") + "," + (g == 1 ? "B" : "A") + "," +
           std::to_string(y) + "\n";
  }
  return csv;
}

}  // namespace synth
