#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "pfr/dataset.hpp"
#include "synth.hpp"

using namespace pfr;

namespace {

DatasetConfig tiny_config() {
  DatasetConfig cfg;
  cfg.target_column = "y";
  cfg.sensitive = {{"s", "m"}};
  return cfg;
}

TabularDataset load_text(const std::string& csv, DatasetConfig cfg) {
  synth::TempDir dir("pfr_dataset");
  const std::string path = dir.file("data.csv");
  synth::write_file(path, csv);
  cfg.path = path;
  return load_csv(path, cfg);
}

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("minimal csv yields features minus target and sensitive") {
  const auto ds = load_text("a,s,y\n1,m,0\n2,f,1\n3,m,1\n", tiny_config());
  REQUIRE(ds.n_rows() == 3);
  REQUIRE(ds.features.size() == 1);
  CHECK(ds.features[0].schema.name == "a");
  CHECK(ds.features[0].schema.kind == ColumnKind::numeric);
  CHECK(ds.target == std::vector<int>{0, 1, 1});
  REQUIRE(ds.sensitive.size() == 1);
  CHECK(ds.sensitive[0].spec.classes == std::vector<std::string>{"f", "m"});
  CHECK(ds.sensitive[0].privileged_indicator() == std::vector<int>{1, 0, 1});
}

TEST_CASE("non-binary target value is rejected") {
  CHECK_THROWS_AS(load_text("a,s,y\n1,m,0\n2,f,2\n", tiny_config()), UnsupportedTargetError);
}

TEST_CASE("positive label maps string targets") {
  auto cfg = tiny_config();
  cfg.positive_label = "yes";
  const auto ds = load_text("a,s,y\n1,m,yes\n2,f,no\n3,f,no\n", cfg);
  CHECK(ds.target == std::vector<int>{1, 0, 0});
}

TEST_CASE("missing and duplicated header columns are schema errors") {
  CHECK_THROWS_AS(load_text("a,s\n1,m\n", tiny_config()), SchemaError);
  CHECK_THROWS_AS(load_text("a,a,s,y\n1,2,m,0\n2,3,f,1\n", tiny_config()), SchemaError);
}

TEST_CASE("rows with missing markers are dropped, all dropped is an error") {
  const auto ds = load_text("a,s,y\n1,m,0\n?,f,1\n3,f,1\n", tiny_config());
  CHECK(ds.n_rows() == 2);
  CHECK_THROWS_AS(load_text("a,s,y\n?,m,0\n?,f,1\n", tiny_config()), SchemaError);
}

TEST_CASE("quoted fields keep commas and doubled quotes") {
  auto cfg = tiny_config();
  cfg.categorical_columns = {"a"};
  const auto ds =
      load_text("a,s,y\n\"x,1\",m,0\n\"say \"\"hi\"\"\",f,1\n\"x,1\",f,1\n", cfg);
  const auto& cats = ds.features[0].schema.categories;
  CHECK(std::find(cats.begin(), cats.end(), "x,1") != cats.end());
  CHECK(std::find(cats.begin(), cats.end(), "say \"hi\"") != cats.end());
}

TEST_CASE("kind comes from parseability unless overridden") {
  auto cfg = tiny_config();
  const auto inferred = load_text("a,b,s,y\n1,u,m,0\n2,v,f,1\n", cfg);
  CHECK(inferred.features[0].schema.kind == ColumnKind::numeric);
  CHECK(inferred.features[1].schema.kind == ColumnKind::categorical);

  cfg.categorical_columns = {"a"};
  const auto forced = load_text("a,b,s,y\n1,u,m,0\n2,v,f,1\n", cfg);
  CHECK(forced.features[0].schema.kind == ColumnKind::categorical);
}

TEST_CASE("single-category categorical column is rejected") {
  auto cfg = tiny_config();
  cfg.categorical_columns = {"a"};
  CHECK_THROWS_AS(load_text("a,s,y\nu,m,0\nu,f,1\n", cfg), SchemaError);
}

TEST_CASE("unknown sensitive or target column is a schema error") {
  auto cfg = tiny_config();
  cfg.sensitive = {{"nope", "m"}};
  CHECK_THROWS_AS(load_text("a,s,y\n1,m,0\n2,f,1\n", cfg), SchemaError);
  auto cfg2 = tiny_config();
  cfg2.target_column = "absent";
  CHECK_THROWS_AS(load_text("a,s,y\n1,m,0\n2,f,1\n", cfg2), SchemaError);
}

TEST_CASE("one-hot expands categories and passes numerics through") {
  auto cfg = tiny_config();
  const auto ds = load_text("age,color,s,y\n10,red,m,0\n20,blue,f,1\n30,red,f,1\n", cfg);
  const auto m = one_hot_encode(ds);
  REQUIRE(m.column_ids() == std::vector<std::string>{"age", "color=blue", "color=red"});
  CHECK(!m.columns[0].source_category.has_value());
  CHECK(m.columns[2].source_category == "red");
  CHECK(m.columns[2].source_attribute == "color");
  // row 0 holds "red"
  CHECK(m.at(0, 1) == 0.0);
  CHECK(m.at(0, 2) == 1.0);
  CHECK(m.at(0, 0) == 10.0);
}

TEST_CASE("each row activates exactly one indicator per categorical attribute") {
  auto cfg = tiny_config();
  const auto ds = load_text(
      "c1,c2,s,y\nred,hot,m,0\nblue,cold,f,1\ngreen,hot,m,1\nred,cold,f,0\n", cfg);
  const auto m = one_hot_encode(ds);
  std::map<std::string, std::vector<std::size_t>> by_attr;
  for (std::size_t c = 0; c < m.n_cols(); ++c) {
    if (m.columns[c].source_category) by_attr[m.columns[c].source_attribute].push_back(c);
  }
  REQUIRE(by_attr.size() == 2);
  for (std::size_t r = 0; r < m.n_rows; ++r) {
    for (const auto& [attr, cols] : by_attr) {
      double sum = 0.0;
      for (auto c : cols) sum += m.at(r, c);
      CHECK(sum == 1.0);
    }
  }
}

TEST_CASE("min-max scaling maps range to unit interval") {
  auto m = synth::make_matrix({{"a", {2, 4, 6}}, {"c", {5, 5, 5}}, {"i", {0, 1, 0}}});
  const auto scaled = min_max_scale(m);
  CHECK(scaled.at(0, 0) == 0.0);
  CHECK(scaled.at(1, 0) == 0.5);
  CHECK(scaled.at(2, 0) == 1.0);
  // constant column degrades to zeros rather than dividing by zero
  for (std::size_t r = 0; r < 3; ++r) CHECK(scaled.at(r, 1) == 0.0);
  // indicator columns are fixed points
  CHECK(scaled.at(0, 2) == 0.0);
  CHECK(scaled.at(1, 2) == 1.0);
  REQUIRE(scaled.scaling.size() == 3);
  CHECK(scaled.scaling[0].min == 2.0);
  CHECK(scaled.scaling[0].max == 6.0);
}

TEST_CASE("stored scaling params apply to new rows without clamping") {
  const auto fit = min_max_scale(synth::make_matrix({{"a", {2, 4, 6}}}));
  auto fresh = synth::make_matrix({{"a", {8, 1}}});
  const auto applied = min_max_apply(fresh, fit.scaling);
  CHECK(applied.at(0, 0) == doctest::Approx(1.5));
  CHECK(applied.at(1, 0) == doctest::Approx(-0.25));
}

TEST_CASE("oversampling equalizes counts using only existing minority rows") {
  std::vector<double> col(130);
  std::vector<int> labels(130);
  for (std::size_t i = 0; i < 130; ++i) {
    col[i] = static_cast<double>(i);
    labels[i] = i < 100 ? 0 : 1;
  }
  const auto m = synth::make_matrix({{"a", col}});
  const auto [res, out_labels] = oversample_minority(m, labels, 17);
  CHECK(res.n_rows == 200);
  CHECK(std::count(out_labels.begin(), out_labels.end(), 1) == 100);
  CHECK(std::count(out_labels.begin(), out_labels.end(), 0) == 100);
  // every emitted minority row is one of the 30 original minority values,
  // and every original row still appears
  std::set<double> seen;
  for (std::size_t r = 0; r < res.n_rows; ++r) {
    if (out_labels[r] == 1) {
      CHECK(res.at(r, 0) >= 100.0);
      seen.insert(res.at(r, 0));
    }
  }
  std::set<double> all;
  for (std::size_t r = 0; r < res.n_rows; ++r) all.insert(res.at(r, 0));
  CHECK(all.size() == 130);
  CHECK(seen.size() <= 30);
}

TEST_CASE("balanced labels keep their counts") {
  const auto m = synth::make_matrix({{"a", {1, 2, 3, 4}}});
  const auto [res, labels] = oversample_minority(m, {0, 1, 0, 1}, 5);
  CHECK(res.n_rows == 4);
  CHECK(std::count(labels.begin(), labels.end(), 1) == 2);
}

TEST_CASE("oversampling is a pure function of seed") {
  std::vector<double> col(60);
  std::vector<int> labels(60);
  for (std::size_t i = 0; i < 60; ++i) {
    col[i] = static_cast<double>(i);
    labels[i] = i < 45 ? 0 : 1;
  }
  const auto m = synth::make_matrix({{"a", col}});
  const auto [a, la] = oversample_minority(m, labels, 99);
  const auto [b, lb] = oversample_minority(m, labels, 99);
  CHECK(a.values == b.values);
  CHECK(la == lb);
  CHECK_THROWS_AS(oversample_minority(m, std::vector<int>(60, 1), 99),
                  DegenerateLabelsError);
}

TEST_CASE("split is stratified, disjoint, and deterministic") {
  std::vector<double> col(10);
  std::vector<int> labels(10);
  for (std::size_t i = 0; i < 10; ++i) {
    col[i] = static_cast<double>(i);
    labels[i] = i % 2 == 0 ? 0 : 1;
  }
  const auto m = synth::make_matrix({{"a", col}});
  const auto sp = split(m, labels, 0.8, 13);
  CHECK(sp.train.n_rows == 8);
  CHECK(sp.eval.n_rows == 2);
  CHECK(std::count(sp.train_labels.begin(), sp.train_labels.end(), 1) == 4);
  CHECK(std::count(sp.eval_labels.begin(), sp.eval_labels.end(), 1) == 1);

  std::set<std::size_t> rows(sp.train_rows.begin(), sp.train_rows.end());
  rows.insert(sp.eval_rows.begin(), sp.eval_rows.end());
  CHECK(rows.size() == 10);

  const auto again = split(m, labels, 0.8, 13);
  CHECK(again.train_rows == sp.train_rows);
  CHECK(again.eval_rows == sp.eval_rows);

  CHECK_THROWS_AS(split(m, labels, 0.0, 13), ParameterError);
  CHECK_THROWS_AS(split(m, labels, 1.0, 13), ParameterError);
}

TEST_CASE("drop_columns removes exactly the named ids") {
  const auto m = min_max_scale(
      synth::make_matrix({{"a", {1, 2}}, {"b", {3, 4}}, {"c", {5, 6}}}));
  const auto same = drop_columns(m, {});
  CHECK(same.values == m.values);
  CHECK(same.column_ids() == m.column_ids());

  const auto two = drop_columns(m, {"b"});
  CHECK(two.column_ids() == std::vector<std::string>{"a", "c"});
  CHECK(two.at(1, 1) == m.at(1, 2));
  REQUIRE(two.scaling.size() == 2);
  CHECK(two.scaling[1].min == 5.0);

  CHECK_THROWS_AS(drop_columns(m, {"ghost"}), ParameterError);
}

TEST_CASE("disjoint drops commute") {
  const auto m = synth::make_matrix(
      {{"a", {1, 2}}, {"b", {3, 4}}, {"c", {5, 6}}, {"d", {7, 8}}});
  const auto ab = drop_columns(drop_columns(m, {"a"}), {"d"});
  const auto ba = drop_columns(drop_columns(m, {"d"}), {"a"});
  CHECK(ab.values == ba.values);
  CHECK(ab.column_ids() == ba.column_ids());
}

TEST_CASE("encoding against reference columns enforces strictness") {
  auto cfg = tiny_config();
  const auto train = load_text("color,s,y\nred,m,0\nblue,f,1\nred,f,1\n", cfg);
  const auto layout = one_hot_encode(train).columns;

  const auto ok = load_text("color,s,y\nblue,m,0\nred,f,1\n", cfg);
  const auto em = encode_with_columns(ok, layout);
  CHECK(em.column_ids() == std::vector<std::string>{"color=blue", "color=red"});
  CHECK(em.at(0, 0) == 1.0);

  auto unseen_cfg = cfg;
  unseen_cfg.categorical_columns = {"color"};
  const auto unseen = load_text("color,s,y\ngreen,m,0\nred,f,1\n", unseen_cfg);
  CHECK_THROWS_AS(encode_with_columns(unseen, layout, true), ValidationError);
  const auto permissive = encode_with_columns(unseen, layout, false);
  CHECK(permissive.at(0, 0) == 0.0);
  CHECK(permissive.at(0, 1) == 0.0);

  // Strictness reports the foreign category first; permissive mode reaches
  // the schema check and reports the missing attribute.
  const auto other = load_text("shape,s,y\nsq,m,0\nrd,f,1\n", cfg);
  CHECK_THROWS_AS(encode_with_columns(other, layout, true), ValidationError);
  CHECK_THROWS_AS(encode_with_columns(other, layout, false), ColumnMismatchError);
}

TEST_CASE("sensitive lookup and subset behave") {
  const auto ds = load_text("a,s,y\n1,m,0\n2,f,1\n3,m,1\n", tiny_config());
  const auto& s = ds.sensitive_column("s");
  CHECK(s.spec.privileged_value == "m");
  CHECK_THROWS_AS(ds.sensitive_column("t"), ParameterError);
  const auto sub = s.subset({2, 0});
  CHECK(sub.codes == std::vector<int>{1, 1});
}

TEST_CASE("adult census file loads with the shipped config") {
  const auto cfg_path = synth::find_repo_file("configs/adult.json");
  const auto cfg = DatasetConfig::from_json_file(cfg_path);
  const auto ds = load_csv(cfg.path, cfg);
  // 32,561 raw rows minus those with missing markers
  CHECK(ds.n_rows() == 30162);
  CHECK(ds.features.size() == 10);
  const auto& race = ds.sensitive_column("race");
  CHECK(race.spec.classes.size() == 5);
  CHECK(race.spec.privileged_value == "White");
  const auto& sex = ds.sensitive_column("sex");
  CHECK(sex.spec.classes == std::vector<std::string>{"Female", "Male"});
  const auto m = one_hot_encode(ds);
  CHECK(m.n_cols() > 50);
  const auto scaled = min_max_scale(m);
  for (std::size_t r = 0; r < scaled.n_rows; r += 997) {
    for (std::size_t c = 0; c < scaled.n_cols(); ++c) {
      CHECK(scaled.at(r, c) >= 0.0);
      CHECK(scaled.at(r, c) <= 1.0);
    }
  }
}

}  // TEST_SUITE
