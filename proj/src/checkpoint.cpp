#include "fiberae/checkpoint.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

namespace fiberae {
namespace {

constexpr const char* kMagic = "fiberae-checkpoint";
constexpr int kVersion = 1;

std::string hex(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

double parse_double(const std::string& tok) {
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0') throw std::runtime_error("checkpoint: bad number '" + tok + "'");
  return v;
}

void write_tensor(std::ostream& os, const std::string& name, const ad::Tensor& t) {
  os << name << ' ' << t.rows << ' ' << t.cols;
  for (double v : t.data) os << ' ' << hex(v);
  os << '\n';
}

class Reader {
 public:
  explicit Reader(std::istream& is) : is_(is) {}

  std::string word() {
    std::string w;
    if (!(is_ >> w)) throw std::runtime_error("checkpoint: truncated file");
    return w;
  }
  void expect(const std::string& key) {
    const auto w = word();
    if (w != key) throw std::runtime_error("checkpoint: expected '" + key + "', found '" + w + "'");
  }
  long integer() {
    const auto w = word();
    std::size_t pos = 0;
    const long v = std::stol(w, &pos);
    if (pos != w.size()) throw std::runtime_error("checkpoint: bad integer '" + w + "'");
    return v;
  }
  double number() { return parse_double(word()); }

 private:
  std::istream& is_;
};

}  // namespace

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void save_checkpoint(const std::filesystem::path& file, const TrainState& state, std::uint64_t config_hash) {
  std::ostringstream os;
  char hash[20];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(config_hash));
  os << kMagic << ' ' << kVersion << '\n'
     << "config_hash " << hash << '\n'
     << "iteration " << state.iteration << '\n'
     << "adam_step " << state.adam.step << '\n'
     << "n_adj " << state.model.rx.n_adj << '\n'
     << "losses " << state.loss_history.size();
  for (double l : state.loss_history) os << ' ' << hex(l);
  os << '\n';

  const auto& m = state.model;
  const std::size_t n_params = 2 + 2 * m.rx.layers.size();
  os << "tensors " << n_params + state.adam.m.size() + state.adam.v.size() << '\n';
  write_tensor(os, "embedding", m.tx.embedding);
  write_tensor(os, "shaper", m.tx.shaper);
  for (std::size_t l = 0; l < m.rx.layers.size(); ++l) {
    write_tensor(os, "w" + std::to_string(l), m.rx.layers[l].weight);
    write_tensor(os, "b" + std::to_string(l), m.rx.layers[l].bias);
  }
  for (std::size_t i = 0; i < state.adam.m.size(); ++i) write_tensor(os, "adam_m" + std::to_string(i), state.adam.m[i]);
  for (std::size_t i = 0; i < state.adam.v.size(); ++i) write_tensor(os, "adam_v" + std::to_string(i), state.adam.v[i]);
  os << "end\n";

  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  const auto tmp = std::filesystem::path(file.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("checkpoint: cannot write " + tmp.string());
    out << os.str();
    out.flush();
    if (!out) throw std::runtime_error("checkpoint: write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, file);
}

TrainState load_checkpoint(const std::filesystem::path& file, std::uint64_t expected_hash) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("checkpoint: cannot read " + file.string());
  Reader r(in);
  r.expect(kMagic);
  if (r.integer() != kVersion) throw std::runtime_error("checkpoint: unsupported version in " + file.string());
  r.expect("config_hash");
  const std::string stored = r.word();
  const auto hash = std::strtoull(stored.c_str(), nullptr, 16);
  if (hash != expected_hash) {
    char want[20];
    std::snprintf(want, sizeof want, "%016llx", static_cast<unsigned long long>(expected_hash));
    throw ConfigMismatch("checkpoint " + file.string() + " was written for config " + stored +
                         ", current config is " + want + "; refusing to resume");
  }

  TrainState s;
  r.expect("iteration");
  s.iteration = r.integer();
  r.expect("adam_step");
  s.adam.step = r.integer();
  r.expect("n_adj");
  s.model.rx.n_adj = static_cast<int>(r.integer());
  r.expect("losses");
  const long n_loss = r.integer();
  for (long i = 0; i < n_loss; ++i) s.loss_history.push_back(r.number());

  r.expect("tensors");
  const long n_tensors = r.integer();
  std::map<std::string, ad::Tensor> tensors;
  for (long i = 0; i < n_tensors; ++i) {
    const std::string name = r.word();
    const auto rows = static_cast<std::size_t>(r.integer());
    const auto cols = static_cast<std::size_t>(r.integer());
    ad::Tensor t(rows, cols);
    for (auto& v : t.data) v = r.number();
    tensors.emplace(name, std::move(t));
  }
  r.expect("end");

  auto take = [&](const std::string& name) {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw std::runtime_error("checkpoint: missing tensor " + name);
    ad::Tensor t = std::move(it->second);
    tensors.erase(it);
    return t;
  };
  s.model.tx.embedding = take("embedding");
  s.model.tx.shaper = take("shaper");
  for (std::size_t l = 0; tensors.count("w" + std::to_string(l)); ++l)
    s.model.rx.layers.push_back({take("w" + std::to_string(l)), take("b" + std::to_string(l))});
  for (std::size_t i = 0; tensors.count("adam_m" + std::to_string(i)); ++i) {
    s.adam.m.push_back(take("adam_m" + std::to_string(i)));
    s.adam.v.push_back(take("adam_v" + std::to_string(i)));
  }
  if (!tensors.empty()) throw std::runtime_error("checkpoint: unexpected tensor " + tensors.begin()->first);
  s.model.tx.validate();
  s.model.rx.validate();
  return s;
}

}  // namespace fiberae
