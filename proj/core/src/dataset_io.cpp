#include "deferlab/dataset_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace deferlab::io {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

void write_atomic(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    f.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!f) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string dataset_csv_header(const SuiteSpec& spec) {
  std::string h = "split,index";
  for (int c = 0; c < spec.feature_dim(); ++c) h += ",x_" + std::to_string(c);
  h += ",y";
  for (int j = 0; j < spec.J; ++j) h += ",m_" + std::to_string(j);
  h += ",region,sector";
  for (int k = 0; k < spec.K; ++k) h += ",eta_" + std::to_string(k);
  for (int j = 0; j < spec.J; ++j) h += ",alpha_" + std::to_string(j);
  h += '\n';
  return h;
}

void append_dataset_csv(std::string& out, const LabeledDataset& data) {
  const std::string split(to_string(data.split));
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Sample& s = data.samples[i];
    const GroundTruth& gt = data.truths[i];
    out += split;
    out += ',';
    out += std::to_string(i);
    for (double v : s.x) (out += ',') += format_double(v);
    (out += ',') += std::to_string(s.y);
    for (int m : s.m) (out += ',') += std::to_string(m);
    (out += ',') += std::to_string(gt.region);
    (out += ',') += std::to_string(gt.sector);
    for (double v : gt.eta) (out += ',') += format_double(v);
    for (double v : gt.alpha) (out += ',') += format_double(v);
    out += '\n';
  }
}

std::string dataset_csv(const SuiteData& data) {
  std::string out = dataset_csv_header(data.train.spec);
  append_dataset_csv(out, data.train);
  append_dataset_csv(out, data.val);
  append_dataset_csv(out, data.test);
  return out;
}

nlohmann::json spec_to_json(const SuiteSpec& spec) {
  return nlohmann::json{{"suite", std::string(to_string(spec.suite))},
                        {"K", spec.K},
                        {"J", spec.J},
                        {"n_train", spec.n_train},
                        {"n_val", spec.n_val},
                        {"n_test", spec.n_test},
                        {"seed", spec.seed},
                        {"expert_rate", spec.expert_rate},
                        {"offregion_rate", spec.offregion_rate},
                        {"feature_dim", spec.feature_dim()}};
}

SuiteSpec spec_from_json(const nlohmann::json& j) {
  SuiteSpec s = SuiteSpec::defaults(parse_suite(j.at("suite").get<std::string>()));
  s.K = j.value("K", s.K);
  s.J = j.value("J", s.J);
  s.n_train = j.value("n_train", s.n_train);
  s.n_val = j.value("n_val", s.n_val);
  s.n_test = j.value("n_test", s.n_test);
  s.seed = j.value("seed", s.seed);
  s.expert_rate = j.value("expert_rate", s.expert_rate);
  s.offregion_rate = j.value("offregion_rate", s.offregion_rate);
  s.validate();
  return s;
}

namespace {

double parse_double(const std::string& s) {
  if (s == "nan") return std::nan("");
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::invalid_argument("bad number '" + s + "'");
  return v;
}

int parse_int(const std::string& s) {
  int v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::invalid_argument("bad integer '" + s + "'");
  return v;
}

}  // namespace

CsvTable parse_csv(std::string_view text) {
  CsvTable t;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  auto end_row = [&] {
    row.push_back(std::move(field));
    field.clear();
    if (t.header.empty())
      t.header = std::move(row);
    else
      t.rows.push_back(std::move(row));
    row.clear();
    any = false;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n') {
      end_row();
    } else if (c != '\r') {
      field += c;
      any = true;
    }
  }
  if (any || !field.empty()) end_row();
  return t;
}

int CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

SuiteData parse_dataset_csv(std::string_view csv, const SuiteSpec& spec) {
  const CsvTable t = parse_csv(csv);
  std::string expected = dataset_csv_header(spec);
  expected.pop_back();
  std::string got;
  for (std::size_t i = 0; i < t.header.size(); ++i) got += (i ? "," : "") + t.header[i];
  if (got != expected) throw std::invalid_argument("dataset CSV header does not match the spec");

  SuiteData data;
  data.train.spec = data.val.spec = data.test.spec = spec;
  data.train.split = Split::Train;
  data.val.split = Split::Val;
  data.test.split = Split::Test;
  const int d = spec.feature_dim();
  for (const auto& r : t.rows) {
    if (r.size() != t.header.size()) throw std::invalid_argument("dataset CSV: ragged row");
    LabeledDataset* target = nullptr;
    if (r[0] == "train") target = &data.train;
    else if (r[0] == "val") target = &data.val;
    else if (r[0] == "test") target = &data.test;
    else throw std::invalid_argument("dataset CSV: unknown split '" + r[0] + "'");
    std::size_t c = 2;
    Sample s;
    for (int i = 0; i < d; ++i) s.x.push_back(parse_double(r[c++]));
    s.y = parse_int(r[c++]);
    for (int j = 0; j < spec.J; ++j) s.m.push_back(parse_int(r[c++]));
    GroundTruth gt;
    gt.region = parse_int(r[c++]);
    gt.sector = parse_int(r[c++]);
    for (int k = 0; k < spec.K; ++k) gt.eta.push_back(parse_double(r[c++]));
    for (int j = 0; j < spec.J; ++j) gt.alpha.push_back(parse_double(r[c++]));
    target->samples.push_back(std::move(s));
    target->truths.push_back(std::move(gt));
  }
  return data;
}

nlohmann::json model_to_json(const LinearModel& model) {
  return nlohmann::json{{"layout", std::string(to_string(model.layout))},
                        {"K", model.K},
                        {"J", model.J},
                        {"d", model.d},
                        {"weights", model.weights},
                        {"bias", model.bias}};
}

LinearModel model_from_json(const nlohmann::json& j) {
  LinearModel m;
  m.layout = parse_layout(j.at("layout").get<std::string>());
  m.K = j.at("K").get<int>();
  m.J = j.at("J").get<int>();
  m.d = j.at("d").get<int>();
  m.weights = j.at("weights").get<std::vector<double>>();
  m.bias = j.at("bias").get<std::vector<double>>();
  m.validate();
  return m;
}

std::string history_csv(const TrainHistory& history) {
  std::string out = "epoch,train_loss,val_defer_loss,val_exact_regret,best\n";
  for (const EpochRecord& e : history.epochs) {
    out += std::to_string(e.epoch);
    (out += ',') += format_double(e.train_loss);
    (out += ',') += format_double(e.val_defer_loss);
    (out += ',') += format_double(e.val_exact_regret);
    out += e.epoch == history.best_epoch ? ",1\n" : ",0\n";
  }
  return out;
}

}  // namespace deferlab::io
