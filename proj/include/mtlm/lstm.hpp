// lstm.hpp
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
//
// Character-level LSTM language model: embedding, stacked standard
// LSTM cells (input/forget/output gates, tanh candidate, no peepholes),
// affine + softmax over the alphabet plus EOS at every step. Position i
// is predicted from the state after consuming characters 1..i-1; the
// initial state is zero, so position 1 sees softmax(b). Training is
// plain SGD over whole utterances with per-component gradient clipping
// and early stopping on development bits per character.
//
// Everything is double precision and sequentially evaluated, so runs
// are bit-reproducible for a fixed seed.

#ifndef MTLM_LSTM_HPP_
#define MTLM_LSTM_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "mtlm/alphabet.hpp"
#include "mtlm/error.hpp"
#include "mtlm/ngram.hpp"  // FormatG17
#include "mtlm/rng.hpp"

namespace mtlm {

struct LstmConfig {
  int embed_dim = 64;
  int hidden_dim = 64;
  int layers = 2;
  double clip = 5.0;
  double learning_rate = 0.2;
  int max_epochs = 100;
  int patience = 5;
  std::uint64_t seed = 1;

  void Validate() const {
    if (embed_dim < 1 || hidden_dim < 1 || layers < 1) {
      ThrowConfig("lstm dimensions must be >= 1");
    }
    if (clip <= 0) ThrowConfig("lstm clip must be positive");
    if (learning_rate <= 0) ThrowConfig("lstm learning rate must be positive");
    if (max_epochs < 1 || patience < 1) {
      ThrowConfig("lstm max_epochs and patience must be >= 1");
    }
  }
};

inline constexpr char kLstmMagic[] = "mtlm-lstm v1";

class LstmModel {
 public:
  LstmModel() = default;

  // Seeded initialization: uniform in [-0.1, 0.1], forget-gate biases 1.
  LstmModel(const LstmConfig& cfg, std::vector<char32_t> alphabet)
      : cfg_(cfg), alphabet_(std::move(alphabet)) {
    cfg_.Validate();
    if (alphabet_.empty()) ThrowConfig("lstm alphabet is empty");
    std::sort(alphabet_.begin(), alphabet_.end());
    alphabet_.erase(std::unique(alphabet_.begin(), alphabet_.end()),
                    alphabet_.end());
    for (std::size_t i = 0; i < alphabet_.size(); ++i) {
      char_index_[alphabet_[i]] = static_cast<int>(i);
    }
    ComputeOffsets();
    params_.resize(total_params_);
    Rng rng(cfg_.seed);
    for (double& p : params_) p = rng.NextReal(-0.1, 0.1);
    for (int l = 0; l < cfg_.layers; ++l) {
      const std::size_t b = bias_off_[static_cast<std::size_t>(l)];
      const auto h = static_cast<std::size_t>(cfg_.hidden_dim);
      for (std::size_t j = 0; j < h; ++j) params_[b + h + j] = 1.0;
    }
  }

  const LstmConfig& config() const { return cfg_; }
  const std::vector<char32_t>& alphabet() const { return alphabet_; }
  int vocab_size() const { return static_cast<int>(alphabet_.size()) + 1; }
  int eos_index() const { return static_cast<int>(alphabet_.size()); }
  const std::vector<double>& params() const { return params_; }
  std::vector<double>& mutable_params() { return params_; }

  // Flat-parameter layout. Embedding rows are per character (EOS is
  // never an input); gate blocks are ordered input, forget, candidate,
  // output, each hidden_dim wide.
  std::size_t embed_offset() const { return embed_off_; }
  std::size_t wx_offset(int layer) const {
    return wx_off_[static_cast<std::size_t>(layer)];
  }
  std::size_t wh_offset(int layer) const {
    return wh_off_[static_cast<std::size_t>(layer)];
  }
  std::size_t bias_offset(int layer) const {
    return bias_off_[static_cast<std::size_t>(layer)];
  }
  std::size_t out_w_offset() const { return out_w_off_; }
  std::size_t out_b_offset() const { return out_b_off_; }

  std::vector<int> EncodeChars(const std::vector<char32_t>& cps) const {
    std::vector<int> out;
    out.reserve(cps.size());
    for (char32_t cp : cps) {
      auto it = char_index_.find(cp);
      if (it == char_index_.end()) {
        ThrowData("character '" + EncodeUtf8(cp) +
                  "' is not in the model alphabet and was not mapped to ★");
      }
      out.push_back(it->second);
    }
    return out;
  }

  // Per-position distributions over the full alphabet plus EOS; one row
  // per position 1..len+1.
  std::vector<std::vector<double>> Forward(const std::vector<int>& seq) const {
    Activations acts;
    RunForward(seq, acts);
    std::vector<std::vector<double>> out;
    out.reserve(seq.size() + 1);
    for (std::size_t p = 0; p <= seq.size(); ++p) {
      out.push_back(SoftmaxAt(acts, p));
    }
    return out;
  }

  // -log2 p(sequence), with the terminal EOS position included.
  double NllBits(const std::vector<int>& seq) const {
    Activations acts;
    RunForward(seq, acts);
    return NllFromActs(seq, acts);
  }

  // Backpropagation through time over the whole sequence; returns the
  // loss in bits and fills `grad` (same layout as params).
  double NllBitsAndGrad(const std::vector<int>& seq,
                        std::vector<double>& grad) const {
    Activations acts;
    RunForward(seq, acts);
    grad.assign(total_params_, 0.0);
    const auto hd = static_cast<std::size_t>(cfg_.hidden_dim);
    const auto v = static_cast<std::size_t>(vocab_size());
    const std::size_t steps = seq.size();
    const double inv_ln2 = 1.0 / std::log(2.0);

    // d(loss)/d(h) per layer, flowing backward in time.
    std::vector<std::vector<double>> dh(
        static_cast<std::size_t>(cfg_.layers), std::vector<double>(hd, 0.0));
    std::vector<std::vector<double>> dc(
        static_cast<std::size_t>(cfg_.layers), std::vector<double>(hd, 0.0));

    double loss = 0.0;
    // Output-layer gradients are computed per position; the hidden
    // gradient they induce at state t = position-1 is stashed here and
    // consumed as time unwinds.
    std::vector<std::vector<double>> dh_top(steps + 1,
                                            std::vector<double>(hd, 0.0));
    for (std::size_t p = 0; p <= steps; ++p) {
      std::vector<double> dist = SoftmaxAt(acts, p);
      const int target = p < steps ? seq[p] : eos_index();
      loss -= std::log2(dist[static_cast<std::size_t>(target)]);
      const double* htop = TopHiddenAt(acts, p);
      // d(bits)/d(logit) = (softmax - onehot) / ln 2. Position 0 reads
      // the zero initial state: only the bias receives gradient there.
      for (std::size_t k = 0; k < v; ++k) {
        double dlogit = dist[k];
        if (static_cast<int>(k) == target) dlogit -= 1.0;
        dlogit *= inv_ln2;
        grad[out_b_off_ + k] += dlogit;
        if (!htop) continue;
        double* gw = &grad[out_w_off_ + k * hd];
        const double* wrow = &params_[out_w_off_ + k * hd];
        for (std::size_t j = 0; j < hd; ++j) {
          gw[j] += dlogit * htop[j];
          dh_top[p][j] += dlogit * wrow[j];
        }
      }
    }
    if (!std::isfinite(loss)) {
      ThrowModel("non-finite loss in LSTM backward pass");
    }

    for (std::size_t t = steps; t >= 1; --t) {
      // Hidden gradient arriving at state t from the softmax at
      // position t (which reads state index t).
      for (std::size_t j = 0; j < hd; ++j) {
        dh[static_cast<std::size_t>(cfg_.layers) - 1][j] += dh_top[t][j];
      }
      std::vector<double> dx_lower;
      for (int l = cfg_.layers - 1; l >= 0; --l) {
        const auto lu = static_cast<std::size_t>(l);
        const std::size_t in_dim = InputDim(l);
        const StepState& st = acts.steps[t - 1].layers[lu];
        const double* c_prev =
            t >= 2 ? acts.steps[t - 2].layers[lu].c.data() : nullptr;
        const double* h_prev =
            t >= 2 ? acts.steps[t - 2].layers[lu].h.data() : nullptr;
        if (!dx_lower.empty()) {
          for (std::size_t j = 0; j < hd; ++j) dh[lu][j] += dx_lower[j];
        }
        std::vector<double> dpre(4 * hd);
        for (std::size_t j = 0; j < hd; ++j) {
          const double i_g = st.gates[j];
          const double f_g = st.gates[hd + j];
          const double g_g = st.gates[2 * hd + j];
          const double o_g = st.gates[3 * hd + j];
          const double tc = st.tanh_c[j];
          const double dho = dh[lu][j];
          const double d_o = dho * tc;
          double d_c = dc[lu][j] + dho * o_g * (1.0 - tc * tc);
          const double d_i = d_c * g_g;
          const double d_g = d_c * i_g;
          const double d_f = c_prev ? d_c * c_prev[j] : 0.0;
          dc[lu][j] = d_c * f_g;  // becomes dc at t-1
          dpre[j] = d_i * i_g * (1.0 - i_g);
          dpre[hd + j] = d_f * f_g * (1.0 - f_g);
          dpre[2 * hd + j] = d_g * (1.0 - g_g * g_g);
          dpre[3 * hd + j] = d_o * o_g * (1.0 - o_g);
        }
        const std::size_t wx = wx_off_[lu], wh = wh_off_[lu], bo = bias_off_[lu];
        std::vector<double> dx(in_dim, 0.0);
        std::vector<double> dh_prev(hd, 0.0);
        for (std::size_t r = 0; r < 4 * hd; ++r) {
          const double d = dpre[r];
          if (d == 0.0) continue;
          grad[bo + r] += d;
          const double* x = st.x.data();
          double* gx = &grad[wx + r * in_dim];
          const double* wxr = &params_[wx + r * in_dim];
          for (std::size_t j = 0; j < in_dim; ++j) {
            gx[j] += d * x[j];
            dx[j] += d * wxr[j];
          }
          if (h_prev) {
            double* gh = &grad[wh + r * hd];
            const double* whr = &params_[wh + r * hd];
            for (std::size_t j = 0; j < hd; ++j) {
              gh[j] += d * h_prev[j];
              dh_prev[j] += d * whr[j];
            }
          } else {
            // h_{t-1} is the zero initial state; weight gradient is 0
            // and nothing flows further back.
          }
        }
        dh[lu] = dh_prev;
        dx_lower = std::move(dx);
      }
      // dx_lower now holds the embedding gradient for input t.
      const auto ed = static_cast<std::size_t>(cfg_.embed_dim);
      double* ge = &grad[embed_off_ +
                         static_cast<std::size_t>(seq[t - 1]) * ed];
      for (std::size_t j = 0; j < ed; ++j) ge[j] += dx_lower[j];
    }
    return loss;
  }

  // One SGD update with per-component clipping to [-clip, clip].
  void SgdStep(const std::vector<double>& grad, double learning_rate,
               double clip) {
    for (std::size_t i = 0; i < params_.size(); ++i) {
      const double g = std::clamp(grad[i], -clip, clip);
      params_[i] -= learning_rate * g;
    }
  }

  void Save(std::ostream& out) const {
    out << kLstmMagic << '\n';
    out << "embed_dim " << cfg_.embed_dim << '\n';
    out << "hidden_dim " << cfg_.hidden_dim << '\n';
    out << "layers " << cfg_.layers << '\n';
    out << "clip " << FormatG17(cfg_.clip) << '\n';
    out << "learning_rate " << FormatG17(cfg_.learning_rate) << '\n';
    out << "max_epochs " << cfg_.max_epochs << '\n';
    out << "patience " << cfg_.patience << '\n';
    out << "seed " << cfg_.seed << '\n';
    out << "alphabet " << alphabet_.size() << '\n';
    for (char32_t cp : alphabet_) {
      std::ostringstream hex;
      hex << "U+" << std::uppercase << std::hex << std::setw(4)
          << std::setfill('0') << static_cast<std::uint32_t>(cp);
      out << hex.str() << '\n';
    }
    out << "params " << params_.size() << '\n';
    for (double p : params_) out << FormatG17(p) << '\n';
    out << "\\end\\\n";
  }

  static LstmModel Load(std::istream& in) {
    std::string line;
    auto need = [&](const char* key) -> std::string {
      if (!std::getline(in, line)) ThrowModel("truncated lstm checkpoint");
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const std::string prefix = std::string(key) + " ";
      if (line.rfind(prefix, 0) != 0) {
        ThrowModel("expected '" + std::string(key) + "' in lstm checkpoint");
      }
      return line.substr(prefix.size());
    };
    if (!std::getline(in, line) || line != kLstmMagic) {
      ThrowModel("not an lstm checkpoint");
    }
    LstmConfig cfg;
    cfg.embed_dim = std::stoi(need("embed_dim"));
    cfg.hidden_dim = std::stoi(need("hidden_dim"));
    cfg.layers = std::stoi(need("layers"));
    cfg.clip = std::strtod(need("clip").c_str(), nullptr);
    cfg.learning_rate = std::strtod(need("learning_rate").c_str(), nullptr);
    cfg.max_epochs = std::stoi(need("max_epochs"));
    cfg.patience = std::stoi(need("patience"));
    cfg.seed = std::stoull(need("seed"));
    const std::size_t n_chars = std::stoull(need("alphabet"));
    std::vector<char32_t> alphabet;
    alphabet.reserve(n_chars);
    for (std::size_t i = 0; i < n_chars; ++i) {
      if (!std::getline(in, line)) ThrowModel("truncated alphabet");
      alphabet.push_back(
          static_cast<char32_t>(std::stoul(line.substr(2), nullptr, 16)));
    }
    LstmModel m(cfg, std::move(alphabet));
    const std::size_t n_params = std::stoull(need("params"));
    if (n_params != m.params_.size()) {
      ThrowModel("checkpoint parameter count does not match shapes");
    }
    for (std::size_t i = 0; i < n_params; ++i) {
      if (!std::getline(in, line)) ThrowModel("truncated parameters");
      m.params_[i] = std::strtod(line.c_str(), nullptr);
    }
    return m;
  }

 private:
  struct StepState {
    std::vector<double> x;       // layer input
    std::vector<double> gates;   // activated i,f,g,o, each hidden_dim wide
    std::vector<double> c, h, tanh_c;
  };
  struct TimeStep {
    std::vector<StepState> layers;
  };
  struct Activations {
    std::vector<TimeStep> steps;  // one per consumed input character
  };

  std::size_t InputDim(int layer) const {
    return static_cast<std::size_t>(layer == 0 ? cfg_.embed_dim
                                               : cfg_.hidden_dim);
  }

  void ComputeOffsets() {
    const auto hd = static_cast<std::size_t>(cfg_.hidden_dim);
    const auto v = static_cast<std::size_t>(vocab_size());
    std::size_t off = 0;
    embed_off_ = off;
    off += alphabet_.size() * static_cast<std::size_t>(cfg_.embed_dim);
    wx_off_.clear();
    wh_off_.clear();
    bias_off_.clear();
    for (int l = 0; l < cfg_.layers; ++l) {
      wx_off_.push_back(off);
      off += 4 * hd * InputDim(l);
      wh_off_.push_back(off);
      off += 4 * hd * hd;
      bias_off_.push_back(off);
      off += 4 * hd;
    }
    out_w_off_ = off;
    off += v * hd;
    out_b_off_ = off;
    off += v;
    total_params_ = off;
  }

  void RunForward(const std::vector<int>& seq, Activations& acts) const {
    const auto hd = static_cast<std::size_t>(cfg_.hidden_dim);
    const auto ed = static_cast<std::size_t>(cfg_.embed_dim);
    acts.steps.resize(seq.size());
    for (std::size_t t = 0; t < seq.size(); ++t) {
      const int ch = seq[t];
      if (ch < 0 || ch >= static_cast<int>(alphabet_.size())) {
        ThrowData("input character index out of range (EOS cannot be "
                  "consumed as input)");
      }
      acts.steps[t].layers.resize(static_cast<std::size_t>(cfg_.layers));
      std::vector<double> x(
          params_.begin() + static_cast<std::ptrdiff_t>(
                                embed_off_ + static_cast<std::size_t>(ch) * ed),
          params_.begin() + static_cast<std::ptrdiff_t>(
                                embed_off_ +
                                (static_cast<std::size_t>(ch) + 1) * ed));
      for (int l = 0; l < cfg_.layers; ++l) {
        const auto lu = static_cast<std::size_t>(l);
        const std::size_t in_dim = InputDim(l);
        StepState& st = acts.steps[t].layers[lu];
        st.x = std::move(x);
        const double* h_prev =
            t >= 1 ? acts.steps[t - 1].layers[lu].h.data() : nullptr;
        const double* c_prev =
            t >= 1 ? acts.steps[t - 1].layers[lu].c.data() : nullptr;
        std::vector<double> pre(
            params_.begin() + static_cast<std::ptrdiff_t>(bias_off_[lu]),
            params_.begin() + static_cast<std::ptrdiff_t>(bias_off_[lu] +
                                                          4 * hd));
        for (std::size_t r = 0; r < 4 * hd; ++r) {
          const double* wxr = &params_[wx_off_[lu] + r * in_dim];
          double acc = 0.0;
          for (std::size_t j = 0; j < in_dim; ++j) acc += wxr[j] * st.x[j];
          if (h_prev) {
            const double* whr = &params_[wh_off_[lu] + r * hd];
            for (std::size_t j = 0; j < hd; ++j) acc += whr[j] * h_prev[j];
          }
          pre[r] += acc;
        }
        st.gates.resize(4 * hd);
        st.c.resize(hd);
        st.h.resize(hd);
        st.tanh_c.resize(hd);
        for (std::size_t j = 0; j < hd; ++j) {
          const double i_g = Sigmoid(pre[j]);
          const double f_g = Sigmoid(pre[hd + j]);
          const double g_g = std::tanh(pre[2 * hd + j]);
          const double o_g = Sigmoid(pre[3 * hd + j]);
          const double c_new = (c_prev ? f_g * c_prev[j] : 0.0) + i_g * g_g;
          st.gates[j] = i_g;
          st.gates[hd + j] = f_g;
          st.gates[2 * hd + j] = g_g;
          st.gates[3 * hd + j] = o_g;
          st.c[j] = c_new;
          st.tanh_c[j] = std::tanh(c_new);
          st.h[j] = o_g * st.tanh_c[j];
        }
        x = st.h;  // input to the next layer
      }
    }
  }

  static double Sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

  // Top-layer hidden state read by the softmax at position p (0-based
  // index into states; p = 0 is the zero initial state).
  const double* TopHiddenAt(const Activations& acts, std::size_t p) const {
    if (p == 0) return nullptr;
    return acts.steps[p - 1]
        .layers[static_cast<std::size_t>(cfg_.layers) - 1]
        .h.data();
  }

  std::vector<double> SoftmaxAt(const Activations& acts,
                                std::size_t p) const {
    const auto hd = static_cast<std::size_t>(cfg_.hidden_dim);
    const auto v = static_cast<std::size_t>(vocab_size());
    const double* h = TopHiddenAt(acts, p);
    std::vector<double> logits(v);
    for (std::size_t k = 0; k < v; ++k) {
      double acc = params_[out_b_off_ + k];
      if (h) {
        const double* wrow = &params_[out_w_off_ + k * hd];
        for (std::size_t j = 0; j < hd; ++j) acc += wrow[j] * h[j];
      }
      logits[k] = acc;
    }
    const double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double& l : logits) {
      l = std::exp(l - mx);
      z += l;
    }
    for (double& l : logits) l /= z;
    return logits;
  }

  double NllFromActs(const std::vector<int>& seq,
                     const Activations& acts) const {
    double bits = 0.0;
    for (std::size_t p = 0; p <= seq.size(); ++p) {
      const std::vector<double> dist = SoftmaxAt(acts, p);
      const int target = p < seq.size() ? seq[p] : eos_index();
      bits -= std::log2(dist[static_cast<std::size_t>(target)]);
    }
    if (!std::isfinite(bits)) ThrowModel("non-finite loss in LSTM forward");
    return bits;
  }

  LstmConfig cfg_;
  std::vector<char32_t> alphabet_;
  std::map<char32_t, int> char_index_;
  std::vector<double> params_;

  std::size_t embed_off_ = 0;
  std::vector<std::size_t> wx_off_, wh_off_, bias_off_;
  std::size_t out_w_off_ = 0, out_b_off_ = 0;
  std::size_t total_params_ = 0;
};

struct LstmTrainLog {
  std::vector<double> dev_bpc;  // one entry per completed epoch
  int best_epoch = -1;          // 0-based epoch of the returned model
  double best_dev_bpc = 0.0;
};

// Per-utterance clipped SGD with early stopping; returns the checkpoint
// with the best development BPC seen. Deterministic for a fixed config.
inline LstmModel TrainLstm(const LstmConfig& cfg,
                           const std::vector<std::vector<char32_t>>& train_cps,
                           const std::vector<std::vector<char32_t>>& dev_cps,
                           const std::vector<char32_t>& alphabet,
                           LstmTrainLog* log = nullptr) {
  if (train_cps.empty() || dev_cps.empty()) {
    ThrowData("lstm training needs nonempty train and dev sets");
  }
  LstmModel model(cfg, alphabet);
  std::vector<std::vector<int>> train, dev;
  train.reserve(train_cps.size());
  dev.reserve(dev_cps.size());
  for (const auto& seq : train_cps) train.push_back(model.EncodeChars(seq));
  for (const auto& seq : dev_cps) dev.push_back(model.EncodeChars(seq));
  std::vector<double> best_params = model.params();
  double best_dev = std::numeric_limits<double>::infinity();
  int best_epoch = -1;
  int stale = 0;
  Rng order_rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::uint64_t dev_positions = 0;
  for (const auto& seq : dev) dev_positions += seq.size() + 1;

  std::vector<double> grad;
  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    order_rng.Shuffle(order);
    for (std::size_t idx : order) {
      const double bits = model.NllBitsAndGrad(train[idx], grad);
      if (!std::isfinite(bits)) {
        ThrowModel("non-finite training loss at epoch " +
                   std::to_string(epoch));
      }
      model.SgdStep(grad, cfg.learning_rate, cfg.clip);
    }
    double dev_bits = 0.0;
    for (const auto& seq : dev) dev_bits += model.NllBits(seq);
    const double dev_bpc = dev_bits / static_cast<double>(dev_positions);
    if (log) log->dev_bpc.push_back(dev_bpc);
    if (dev_bpc < best_dev) {
      best_dev = dev_bpc;
      best_params = model.params();
      best_epoch = epoch;
      stale = 0;
    } else if (++stale >= cfg.patience) {
      break;
    }
  }
  model.mutable_params() = best_params;
  if (log) {
    log->best_epoch = best_epoch;
    log->best_dev_bpc = best_dev;
  }
  return model;
}

}  // namespace mtlm

#endif  // MTLM_LSTM_HPP_
