// Fitted-model persistence on top of the tensor archive. Every state file
// carries a model-kind marker and the analysis settings so downstream stages
// (mask extraction, diarization) can run from the file alone.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "diasep/archive.hpp"
#include "diasep/cacgmm.hpp"
#include "diasep/loose.hpp"
#include "diasep/observation.hpp"
#include "diasep/tight.hpp"

namespace diasep {

enum class ModelKind : std::uint8_t { cacgmm = 0, tight = 1, loose = 2 };

inline std::string model_kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::cacgmm: return "cacgmm";
    case ModelKind::tight: return "tight";
    case ModelKind::loose: return "loose";
  }
  fail("model_kind_name: unknown kind");
}

namespace detail {

inline Tensor<std::uint8_t> kind_tensor(ModelKind k) {
  Tensor<std::uint8_t> t({1});
  t(0) = static_cast<std::uint8_t>(k);
  return t;
}

inline Tensor<double> loglik_tensor(const std::vector<double>& ll) {
  Tensor<double> t({ll.empty() ? std::size_t(1) : ll.size()});
  if (ll.empty())
    t(0) = 0.0;
  else
    for (std::size_t i = 0; i < ll.size(); ++i) t(i) = ll[i];
  return t;
}

inline Tensor<std::uint8_t> flags_tensor(const std::vector<std::uint8_t>& v,
                                         std::vector<std::size_t> dims) {
  Tensor<std::uint8_t> t(std::move(dims));
  check(t.size() == v.size(), "state_io: flag size mismatch");
  for (std::size_t i = 0; i < v.size(); ++i) t[i] = v[i];
  return t;
}

}  // namespace detail

inline ModelKind peek_model_kind(const std::string& path) {
  const auto entries = read_archive(path);
  const auto k = require_entry<std::uint8_t>(entries, "model_kind");
  check(k.size() == 1 && k[0] <= 2, "state file: bad model_kind entry");
  return static_cast<ModelKind>(k[0]);
}

inline void save_loose_state(const std::string& path, const LooseState& st,
                             const StftConfig& cfg) {
  std::vector<ArchiveEntry> entries;
  entries.push_back({"mu", st.vmf.mu});
  entries.push_back({"kappa", st.vmf.kappa});
  entries.push_back({"pi", st.pi});
  entries.push_back({"alpha", st.alpha});
  entries.push_back({"B", st.cacg.B});
  entries.push_back({"gamma", st.gamma});
  entries.push_back({"eta", st.eta});
  entries.push_back({"delta", st.delta});
  entries.push_back({"loglik", detail::loglik_tensor(st.loglik)});
  entries.push_back({"vmf_dormant", detail::flags_tensor(st.vmf.dormant, {st.vmf.mu.dim(0)})});
  entries.push_back({"cacg_dormant", st.cacg.dormant});
  entries.push_back({"model_kind", detail::kind_tensor(ModelKind::loose)});
  entries.push_back({"stft_config", stft_config_tensor(cfg)});
  write_archive(path, entries);
}

struct LoadedLoose {
  LooseState state;
  StftConfig stft_config;
};

inline LoadedLoose load_loose_state(const std::string& path) {
  const auto entries = read_archive(path);
  check(static_cast<ModelKind>(require_entry<std::uint8_t>(entries, "model_kind")(0)) ==
            ModelKind::loose,
        "load_loose_state: file does not hold a loosely coupled model");
  LoadedLoose out;
  LooseState& st = out.state;
  st.vmf.mu = require_entry<double>(entries, "mu");
  st.vmf.kappa = require_entry<double>(entries, "kappa");
  st.pi = require_entry<double>(entries, "pi");
  st.alpha = require_entry<double>(entries, "alpha");
  st.cacg.B = require_entry<cdouble>(entries, "B");
  st.gamma = require_entry<double>(entries, "gamma");
  st.eta = require_entry<double>(entries, "eta");
  st.delta = require_entry<double>(entries, "delta");
  const auto ll = require_entry<double>(entries, "loglik");
  st.loglik.assign(ll.data(), ll.data() + ll.size());
  const auto vd = require_entry<std::uint8_t>(entries, "vmf_dormant");
  st.vmf.dormant.assign(vd.data(), vd.data() + vd.size());
  st.cacg.dormant = require_entry<std::uint8_t>(entries, "cacg_dormant");
  out.stft_config = stft_config_from_tensor(require_entry<double>(entries, "stft_config"));
  return out;
}

inline void save_tight_state(const std::string& path, const TightState& st,
                             const StftConfig& cfg) {
  std::vector<ArchiveEntry> entries;
  entries.push_back({"mu", st.vmf.mu});
  entries.push_back({"kappa", st.vmf.kappa});
  entries.push_back({"pi", st.pi});
  entries.push_back({"B", st.cacg.B});
  entries.push_back({"posterior", st.posterior});
  entries.push_back({"loglik", detail::loglik_tensor(st.loglik)});
  entries.push_back({"vmf_dormant", detail::flags_tensor(st.vmf.dormant, {st.vmf.mu.dim(0)})});
  entries.push_back({"cacg_dormant", st.cacg.dormant});
  entries.push_back({"model_kind", detail::kind_tensor(ModelKind::tight)});
  entries.push_back({"stft_config", stft_config_tensor(cfg)});
  write_archive(path, entries);
}

struct LoadedTight {
  TightState state;
  StftConfig stft_config;
};

inline LoadedTight load_tight_state(const std::string& path) {
  const auto entries = read_archive(path);
  check(static_cast<ModelKind>(require_entry<std::uint8_t>(entries, "model_kind")(0)) ==
            ModelKind::tight,
        "load_tight_state: file does not hold a tightly coupled model");
  LoadedTight out;
  TightState& st = out.state;
  st.vmf.mu = require_entry<double>(entries, "mu");
  st.vmf.kappa = require_entry<double>(entries, "kappa");
  st.pi = require_entry<double>(entries, "pi");
  st.cacg.B = require_entry<cdouble>(entries, "B");
  st.posterior = require_entry<double>(entries, "posterior");
  const auto ll = require_entry<double>(entries, "loglik");
  st.loglik.assign(ll.data(), ll.data() + ll.size());
  const auto vd = require_entry<std::uint8_t>(entries, "vmf_dormant");
  st.vmf.dormant.assign(vd.data(), vd.data() + vd.size());
  st.cacg.dormant = require_entry<std::uint8_t>(entries, "cacg_dormant");
  out.stft_config = stft_config_from_tensor(require_entry<double>(entries, "stft_config"));
  return out;
}

inline void save_cacgmm_state(const std::string& path, const CacgmmState& st,
                              const StftConfig& cfg) {
  std::vector<ArchiveEntry> entries;
  entries.push_back({"pi", st.pi});
  entries.push_back({"B", st.cacg.B});
  entries.push_back({"eta", st.eta});
  entries.push_back({"loglik", detail::loglik_tensor(st.loglik)});
  entries.push_back({"cacg_dormant", st.cacg.dormant});
  entries.push_back({"model_kind", detail::kind_tensor(ModelKind::cacgmm)});
  entries.push_back({"stft_config", stft_config_tensor(cfg)});
  write_archive(path, entries);
}

struct LoadedCacgmm {
  CacgmmState state;
  StftConfig stft_config;
};

inline LoadedCacgmm load_cacgmm_state(const std::string& path) {
  const auto entries = read_archive(path);
  check(static_cast<ModelKind>(require_entry<std::uint8_t>(entries, "model_kind")(0)) ==
            ModelKind::cacgmm,
        "load_cacgmm_state: file does not hold a spatial-only model");
  LoadedCacgmm out;
  CacgmmState& st = out.state;
  st.pi = require_entry<double>(entries, "pi");
  st.cacg.B = require_entry<cdouble>(entries, "B");
  st.eta = require_entry<double>(entries, "eta");
  const auto ll = require_entry<double>(entries, "loglik");
  st.loglik.assign(ll.data(), ll.data() + ll.size());
  st.cacg.dormant = require_entry<std::uint8_t>(entries, "cacg_dormant");
  out.stft_config = stft_config_from_tensor(require_entry<double>(entries, "stft_config"));
  return out;
}

}  // namespace diasep
