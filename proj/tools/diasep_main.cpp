// Batch front-end: scenario simulation, initialization, model fitting,
// mask extraction, beamforming, diarization, and scoring, exchanged through
// tensor archives, WAV files, and RTTM.
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "diasep/diasep.hpp"

namespace fs = std::filesystem;
using namespace diasep;

namespace {

constexpr const char* kVersion = "0.1.0";

// Files created by the running command; removed unless committed, so failed
// stages never leave partial outputs behind.
class OutputGuard {
 public:
  ~OutputGuard() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& p : paths_) fs::remove(p, ec);
  }
  fs::path track(fs::path p) {
    paths_.push_back(p);
    return p;
  }
  void commit() { committed_ = true; }

 private:
  std::vector<fs::path> paths_;
  bool committed_ = false;
};

void append_provenance(const fs::path& dir, const std::string& line) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  std::ofstream out(dir / "provenance.txt", std::ios::app);
  check(out.good(), "cannot write provenance in " + dir.string());
  out << line << " version=" << kVersion << "\n";
}

fs::path provenance_dir_for(const fs::path& output) {
  return output.has_parent_path() ? output.parent_path() : fs::path(".");
}

// ---------------------------------------------------------------- simulate

void run_simulate(const std::string& cfg_path, const std::string& out_dir_s) {
  const ScenarioConfig cfg = parse_scenario_file(cfg_path);
  const fs::path dir(out_dir_s);
  fs::create_directories(dir);
  OutputGuard guard;

  const SimResult sim = simulate(cfg);
  save_observations(guard.track(dir / "obs.tnsa").string(), sim.obs);
  save_truth(guard.track(dir / "truth.tnsa").string(), sim.truth);
  write_wav(guard.track(dir / "mix.wav").string(), sim.mix_wave, cfg.stft.sample_rate);
  for (std::size_t k = 0; k < sim.clean_waves.size(); ++k) {
    Tensor<double> w({sim.clean_waves[k].dim(0), 1});
    for (std::size_t s = 0; s < w.dim(0); ++s) w(s, 0) = sim.clean_waves[k](s);
    write_wav(guard.track(dir / ("clean_" + std::to_string(k) + ".wav")).string(), w,
              cfg.stft.sample_rate);
  }
  const Diarization ref = activity_to_segments(sim.truth.activity, cfg.stft);
  write_rttm_file(guard.track(dir / "ref.rttm").string(), ref, "session");
  std::error_code ec;
  if (!fs::equivalent(cfg_path, dir / "scenario.cfg", ec))
    fs::copy_file(cfg_path, dir / "scenario.cfg", fs::copy_options::overwrite_existing);

  guard.commit();
  append_provenance(dir, "simulate cfg=" + cfg_path + " seed=" + std::to_string(cfg.seed));
}

// -------------------------------------------------------------------- init

void run_init(const std::string& obs_path, const std::string& oracle_path,
              const std::string& out_path, std::size_t speakers, std::uint64_t seed) {
  ObservationSet obs = load_observations(obs_path);
  InitConfig cfg;
  cfg.seed = seed;

  InitPosterior ip;
  std::size_t K = speakers;
  if (!oracle_path.empty()) {
    const auto entries = read_archive(oracle_path);
    const Tensor<std::uint8_t>& activity = require_entry<std::uint8_t>(entries, "activity");
    K = activity.dim(0);
    ip = make_oracle_init(obs, activity, 2 * K + 1, cfg);
  } else {
    const Tensor<double> le =
        obs.log_energy.empty() ? spectral_log_energy(obs) : obs.log_energy;
    ip = make_init(obs, K, 2 * K + 1, cfg, le);
  }

  OutputGuard guard;
  save_init(guard.track(out_path).string(), ip);
  guard.commit();
  append_provenance(provenance_dir_for(out_path),
                    "init obs=" + obs_path +
                        (oracle_path.empty() ? "" : " oracle=" + oracle_path) +
                        " speakers=" + std::to_string(K) + " seed=" + std::to_string(seed));
}

// --------------------------------------------------------------------- fit

void run_fit(const std::string& model, const std::string& obs_path,
             const std::string& init_path, std::size_t iters, std::uint64_t seed,
             const std::string& out_path) {
  const ObservationSet obs = load_observations(obs_path);
  const InitPosterior ip = load_init(init_path);
  OutputGuard guard;
  guard.track(out_path);

  if (model == "cacgmm") {
    const CacgmmState st = cacgmm_fit(obs, ip.z_spat0, iters);
    save_cacgmm_state(out_path, st, obs.stft_config);
  } else if (model == "tight") {
    const TightState st = tight_fit(obs, tight_init_posterior(ip.z_spec0, obs.F()), iters);
    save_tight_state(out_path, st, obs.stft_config);
  } else if (model == "loose") {
    const LooseState st = loose_fit(obs, ip.delta0, iters);
    save_loose_state(out_path, st, obs.stft_config);
  } else {
    fail("fit: unknown model '" + model + "' (expected cacgmm, tight, or loose)");
  }
  guard.commit();
  append_provenance(provenance_dir_for(out_path),
                    "fit model=" + model + " obs=" + obs_path + " init=" + init_path +
                        " iters=" + std::to_string(iters) + " seed=" + std::to_string(seed));
}

// ------------------------------------------------------------------- masks

void run_masks(const std::string& state_path, double tau, const std::string& out_path) {
  check(peek_model_kind(state_path) == ModelKind::loose,
        "masks: time-frequency masks require a loosely coupled model state");
  const LoadedLoose loaded = load_loose_state(state_path);
  const LooseState& st = loaded.state;
  check(!st.delta.empty(), "masks: state file lacks the joint posterior");

  const MaskResult mr = extract_masks(st.delta, tau);

  std::vector<ArchiveEntry> entries;
  entries.push_back({"m", mr.m});
  entries.push_back({"beta", mr.weights.beta});
  entries.push_back({"beta_thresholded", mr.weights.beta_thresholded});
  Tensor<double> tau_t({1});
  tau_t(0) = mr.weights.tau_th;
  entries.push_back({"tau", tau_t});
  Tensor<double> noise_t({1});
  noise_t(0) = static_cast<double>(mr.weights.noise_location);
  entries.push_back({"noise_location", noise_t});
  Tensor<std::uint8_t> lost({std::max<std::size_t>(mr.speaker_lost.size(), 1)});
  lost.fill(0);
  for (std::size_t k = 0; k < mr.speaker_lost.size(); ++k) lost(k) = mr.speaker_lost[k];
  entries.push_back({"speaker_lost", lost});
  // carried along so diarization can run from the mask file alone
  entries.push_back({"gamma", st.gamma});
  entries.push_back({"mu", st.vmf.mu});
  entries.push_back({"stft_config", stft_config_tensor(loaded.stft_config)});

  OutputGuard guard;
  write_archive(guard.track(out_path).string(), entries);
  guard.commit();
  append_provenance(provenance_dir_for(out_path),
                    "masks state=" + state_path + " tau=" + std::to_string(tau));
}

// ---------------------------------------------------------------- beamform

void run_beamform(const std::string& obs_path, const std::string& masks_path,
                  std::size_t ref_channel, const std::string& out_dir_s) {
  const ObservationSet obs = load_observations(obs_path);
  const auto mask_entries = read_archive(masks_path);
  const Tensor<double>& m = require_entry<double>(mask_entries, "m");
  check(m.rank() == 3 && m.dim(1) == obs.T() && m.dim(2) == obs.F(),
        "beamform: mask shape does not match the observations");
  const std::size_t K = m.dim(0), T = obs.T(), F = obs.F();

  // undo the per-bin normalization so covariances live on true spectra
  Tensor<cdouble> raw({T, F, obs.C()});
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t f = 0; f < F; ++f)
      for (std::size_t c = 0; c < obs.C(); ++c) raw(t, f, c) = obs.y(t, f, c) * obs.norm(t, f);

  const fs::path dir(out_dir_s);
  fs::create_directories(dir);
  OutputGuard guard;

  Tensor<cdouble> est_all({K, T, F});
  for (std::size_t k = 0; k < K; ++k) {
    const BeamformOutput bo = extract_speaker(raw, m, k, ref_channel);
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t f = 0; f < F; ++f) est_all(k, t, f) = bo.stft(t, f);
    Tensor<cdouble> spec({T, F, 1});
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t f = 0; f < F; ++f) spec(t, f, 0) = bo.stft(t, f);
    const Tensor<double> wave = istft(spec, obs.stft_config);
    write_wav(guard.track(dir / ("est_" + std::to_string(k) + ".wav")).string(), wave,
              obs.stft_config.sample_rate);
  }
  std::vector<ArchiveEntry> entries;
  entries.push_back({"est", est_all});
  Tensor<double> refc({1});
  refc(0) = static_cast<double>(ref_channel);
  entries.push_back({"ref_channel", refc});
  entries.push_back({"stft_config", stft_config_tensor(obs.stft_config)});
  write_archive(guard.track(dir / "est.tnsa").string(), entries);

  guard.commit();
  append_provenance(dir, "beamform obs=" + obs_path + " masks=" + masks_path +
                             " ref=" + std::to_string(ref_channel));
}

// ----------------------------------------------------------------- diarize

void run_diarize(const std::string& in_path, const std::string& out_path) {
  const auto entries = read_archive(in_path);

  Tensor<double> gamma;          // [K,T] per-frame speaker weights
  Tensor<double> mu;             // [K,D] or empty
  StftConfig stft_cfg;
  if (find_entry(entries, "model_kind") != nullptr) {
    const ModelKind kind = static_cast<ModelKind>(
        require_entry<std::uint8_t>(entries, "model_kind")(0));
    if (kind == ModelKind::loose) {
      const LoadedLoose loaded = load_loose_state(in_path);
      gamma = loaded.state.gamma;
      mu = loaded.state.vmf.mu;
      stft_cfg = loaded.stft_config;
    } else if (kind == ModelKind::tight) {
      const LoadedTight loaded = load_tight_state(in_path);
      const Tensor<double>& post = loaded.state.posterior;
      const std::size_t K = post.dim(0), T = post.dim(1), F = post.dim(2);
      gamma = Tensor<double>({K, T});
      for (std::size_t k = 0; k < K; ++k)
        for (std::size_t t = 0; t < T; ++t) {
          double acc = 0.0;
          for (std::size_t f = 0; f < F; ++f) acc += post(k, t, f);
          gamma(k, t) = acc / static_cast<double>(F);
        }
      mu = loaded.state.vmf.mu;
      stft_cfg = loaded.stft_config;
    } else {
      const LoadedCacgmm loaded = load_cacgmm_state(in_path);
      const Tensor<double>& eta = loaded.state.eta;
      const std::size_t L = eta.dim(0), T = eta.dim(1), F = eta.dim(2);
      gamma = Tensor<double>({L, T});
      for (std::size_t l = 0; l < L; ++l)
        for (std::size_t t = 0; t < T; ++t) {
          double acc = 0.0;
          for (std::size_t f = 0; f < F; ++f) acc += eta(l, t, f);
          gamma(l, t) = acc / static_cast<double>(F);
        }
      stft_cfg = loaded.stft_config;  // spatial classes reported as speakers
    }
  } else if (find_entry(entries, "m") != nullptr) {
    gamma = require_entry<double>(entries, "gamma");
    mu = require_entry<double>(entries, "mu");
    stft_cfg = stft_config_from_tensor(require_entry<double>(entries, "stft_config"));
  } else {
    fail("diarize: " + in_path + " holds neither a model state nor masks");
  }

  Tensor<std::uint8_t> activity = smooth_activity(gamma, stft_cfg, SmoothConfig{});
  std::vector<std::size_t> ids;
  if (!mu.empty()) {
    const DuplicateResult dup = remove_duplicates(activity, mu);
    activity = dup.activity;
    ids = dup.kept;
  } else {
    for (std::size_t k = 0; k < activity.dim(0); ++k) ids.push_back(k);
  }
  const Diarization d = activity_to_segments(activity, stft_cfg, &ids);

  OutputGuard guard;
  write_rttm_file(guard.track(out_path).string(), d, "session");
  guard.commit();
  append_provenance(provenance_dir_for(out_path), "diarize input=" + in_path);
}

// -------------------------------------------------------------------- eval

struct ReportLine {
  std::string key;
  double value;
};

void run_eval(const std::string& dir_s, const std::string& truth_dir_s,
              const std::string& out_path) {
  const fs::path dir(dir_s), truth_dir(truth_dir_s);
  check(fs::exists(truth_dir / "truth.tnsa"), "eval: no truth.tnsa in " + truth_dir_s);
  const GroundTruth truth = load_truth((truth_dir / "truth.tnsa").string());
  const ObservationSet obs = load_observations((truth_dir / "obs.tnsa").string());
  const std::size_t K = truth.activity.dim(0), T = truth.activity.dim(1);

  std::vector<ReportLine> report;
  report.push_back({"achieved_overlap", truth.achieved_overlap});

  if (fs::exists(truth_dir / "ref.rttm") && fs::exists(dir / "diarization.rttm")) {
    const Diarization ref = read_rttm_file((truth_dir / "ref.rttm").string());
    const Diarization hyp = read_rttm_file((dir / "diarization.rttm").string());
    const DerBreakdown db = der_detail(ref, hyp);
    report.push_back({"der", db.der});
    report.push_back({"der_missed", db.missed});
    report.push_back({"der_false_alarm", db.false_alarm});
    report.push_back({"der_confusion", db.confusion});
    report.push_back({"der_reference_time", db.reference_time});

    std::size_t hyp_k = 0;
    for (const Segment& s : hyp.segments) hyp_k = std::max(hyp_k, s.speaker + 1);
    hyp_k = std::max<std::size_t>(hyp_k, 1);
    const Tensor<std::uint8_t> hyp_act =
        segments_to_activity(hyp, hyp_k, T, obs.stft_config);
    report.push_back({"frame_accuracy", frame_accuracy(truth.activity, hyp_act)});
  }

  if (fs::exists(dir / "masks.tnsa")) {
    const auto mask_entries = read_archive((dir / "masks.tnsa").string());
    const Tensor<double>& m = require_entry<double>(mask_entries, "m");
    if (m.same_shape(truth.oracle_masks))
      report.push_back({"mask_divergence", mask_divergence(m, truth.oracle_masks)});
  }

  bool have_est = true;
  for (std::size_t k = 0; k < K; ++k)
    if (!fs::exists(dir / ("est_" + std::to_string(k) + ".wav"))) have_est = false;
  if (have_est && fs::exists(truth_dir / "mix.wav")) {
    const WavData mix = read_wav((truth_dir / "mix.wav").string());
    std::vector<Tensor<double>> clean(K), est(K);
    std::size_t n = mix.samples.dim(0);
    for (std::size_t k = 0; k < K; ++k) {
      const WavData cw = read_wav((truth_dir / ("clean_" + std::to_string(k) + ".wav")).string());
      const WavData ew = read_wav((dir / ("est_" + std::to_string(k) + ".wav")).string());
      n = std::min({n, cw.samples.dim(0), ew.samples.dim(0)});
      Tensor<double> c({cw.samples.dim(0)}), e({ew.samples.dim(0)});
      for (std::size_t s = 0; s < c.dim(0); ++s) c(s) = cw.samples(s, 0);
      for (std::size_t s = 0; s < e.dim(0); ++s) e(s) = ew.samples(s, 0);
      clean[k] = std::move(c);
      est[k] = std::move(e);
    }
    const auto cut = [n](const Tensor<double>& v) {
      Tensor<double> out({n});
      for (std::size_t s = 0; s < n; ++s) out(s) = v(s);
      return out;
    };
    Tensor<double> mix0({n});
    for (std::size_t s = 0; s < n; ++s) mix0(s) = mix.samples(s, 0);

    // best speaker permutation by total SI-SDR
    std::vector<std::vector<double>> cost(K, std::vector<double>(K, 0.0));
    std::vector<std::vector<double>> sdr(K, std::vector<double>(K, 0.0));
    for (std::size_t i = 0; i < K; ++i) {
      const Tensor<double> ci = cut(clean[i]);
      for (std::size_t j = 0; j < K; ++j) {
        sdr[i][j] = si_sdr(cut(est[j]), ci);
        cost[i][j] = -sdr[i][j];
      }
    }
    const auto assign = hungarian(cost);
    double est_mean = 0.0, mix_mean = 0.0;
    for (std::size_t i = 0; i < K; ++i) {
      est_mean += sdr[i][assign[i]];
      mix_mean += si_sdr(mix0, cut(clean[i]));
    }
    est_mean /= static_cast<double>(K);
    mix_mean /= static_cast<double>(K);
    report.push_back({"si_sdr_est", est_mean});
    report.push_back({"si_sdr_mix", mix_mean});
    report.push_back({"si_sdr_improvement", est_mean - mix_mean});
  }

  OutputGuard guard;
  {
    std::ofstream out(guard.track(out_path).string(), std::ios::trunc);
    check(out.good(), "eval: cannot write " + out_path);
    char buf[64];
    for (const ReportLine& r : report) {
      std::snprintf(buf, sizeof(buf), "%.6f", r.value);
      out << r.key << " = " << buf << "\n";
    }
    out << "summary:";
    for (const ReportLine& r : report) {
      std::snprintf(buf, sizeof(buf), "%.6f", r.value);
      out << " " << r.key << "=" << buf;
    }
    out << "\n";
  }
  guard.commit();
  append_provenance(provenance_dir_for(out_path),
                    "eval dir=" + dir_s + " truth=" + truth_dir_s);
}

// ---------------------------------------------------------------- pipeline

void run_pipeline(const std::string& cfg_path, const std::string& out_dir_s,
                  const std::string& model, std::size_t iters, bool blind,
                  double tau, std::size_t ref_channel) {
  const fs::path dir(out_dir_s);
  fs::create_directories(dir);
  {  // fresh provenance per pipeline run
    std::ofstream trunc(dir / "provenance.txt", std::ios::trunc);
  }
  const ScenarioConfig cfg = parse_scenario_file(cfg_path);

  run_simulate(cfg_path, out_dir_s);
  run_init((dir / "obs.tnsa").string(), blind ? "" : (dir / "truth.tnsa").string(),
           (dir / "init.tnsa").string(), cfg.speakers, cfg.seed);
  run_fit(model, (dir / "obs.tnsa").string(), (dir / "init.tnsa").string(), iters, cfg.seed,
          (dir / "state.tnsa").string());
  if (model == "loose") {
    run_masks((dir / "state.tnsa").string(), tau, (dir / "masks.tnsa").string());
    run_beamform((dir / "obs.tnsa").string(), (dir / "masks.tnsa").string(), ref_channel,
                 out_dir_s);
  }
  run_diarize((dir / "state.tnsa").string(), (dir / "diarization.rttm").string());
  run_eval(out_dir_s, out_dir_s, (dir / "report.txt").string());
}

const char* kUsage =
    "usage: diasep <subcommand> [args]\n"
    "  simulate <scenario.cfg> -o <dir>\n"
    "  init <obs> [--oracle <activity>] [--speakers K] [--seed S] -o <init>\n"
    "  fit {cacgmm|tight|loose} <obs> --init <init> [--iters N] [--seed S] -o <state>\n"
    "  masks <state> [--tau 0.55] -o <masks>\n"
    "  beamform <obs> <masks> [--ref 0] -o <dir>\n"
    "  diarize <state-or-masks> -o <rttm>\n"
    "  eval <dir> --truth <dir> -o <report>\n"
    "  pipeline <scenario.cfg> [--model loose] [--iters N] [--blind] -o <dir>\n";

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::string> known = {"simulate", "init",    "fit",  "masks",
                                          "beamform", "diarize", "eval", "pipeline"};
  if (argc < 2) {
    std::cerr << kUsage;
    return 2;
  }
  const std::string sub = argv[1];
  if (sub == "-h" || sub == "--help") {
    std::cout << kUsage;
    return 0;
  }
  if (std::find(known.begin(), known.end(), sub) == known.end()) {
    std::cerr << "unknown subcommand '" << sub << "'\n" << kUsage;
    return 2;
  }

  CLI::App app{"loosely coupled diarization and separation"};
  app.require_subcommand(1);

  // simulate
  std::string sim_cfg, sim_out;
  auto* c_sim = app.add_subcommand("simulate", "render a synthetic meeting scene");
  c_sim->add_option("scenario", sim_cfg, "scenario config file")->required();
  c_sim->add_option("-o,--output", sim_out, "output directory")->required();

  // init
  std::string init_obs, init_oracle, init_out;
  std::size_t init_speakers = 2;
  std::uint64_t init_seed = 0;
  auto* c_init = app.add_subcommand("init", "compute initial posteriors");
  c_init->add_option("obs", init_obs, "observation archive")->required();
  c_init->add_option("--oracle", init_oracle, "archive with a true activity entry");
  c_init->add_option("--speakers", init_speakers, "speaker count for blind init");
  c_init->add_option("--seed", init_seed, "clustering seed");
  c_init->add_option("-o,--output", init_out, "output init archive")->required();

  // fit
  std::string fit_model, fit_obs, fit_init, fit_out;
  std::size_t fit_iters = 100;
  std::uint64_t fit_seed = 0;
  auto* c_fit = app.add_subcommand("fit", "run EM from an initialization");
  c_fit->add_option("model", fit_model, "cacgmm | tight | loose")->required();
  c_fit->add_option("obs", fit_obs, "observation archive")->required();
  c_fit->add_option("--init", fit_init, "init archive")->required();
  c_fit->add_option("--iters", fit_iters, "EM iterations");
  c_fit->add_option("--seed", fit_seed, "recorded seed");
  c_fit->add_option("-o,--output", fit_out, "output state archive")->required();

  // masks
  std::string masks_state, masks_out;
  double masks_tau = kTauThDefault;
  auto* c_masks = app.add_subcommand("masks", "extract time-frequency masks");
  c_masks->add_option("state", masks_state, "loose state archive")->required();
  c_masks->add_option("--tau", masks_tau, "coupling threshold");
  c_masks->add_option("-o,--output", masks_out, "output mask archive")->required();

  // beamform
  std::string bf_obs, bf_masks, bf_out;
  std::size_t bf_ref = 0;
  auto* c_bf = app.add_subcommand("beamform", "mask-driven MVDR extraction");
  c_bf->add_option("obs", bf_obs, "observation archive")->required();
  c_bf->add_option("masks", bf_masks, "mask archive")->required();
  c_bf->add_option("--ref", bf_ref, "reference channel");
  c_bf->add_option("-o,--output", bf_out, "output directory")->required();

  // diarize
  std::string dia_in, dia_out;
  auto* c_dia = app.add_subcommand("diarize", "segment activity into RTTM");
  c_dia->add_option("input", dia_in, "state or mask archive")->required();
  c_dia->add_option("-o,--output", dia_out, "output RTTM path")->required();

  // eval
  std::string eval_dir, eval_truth, eval_out;
  auto* c_eval = app.add_subcommand("eval", "score a result directory");
  c_eval->add_option("dir", eval_dir, "directory with hypothesis artifacts")->required();
  c_eval->add_option("--truth", eval_truth, "directory with simulator truth")->required();
  c_eval->add_option("-o,--output", eval_out, "report path")->required();

  // pipeline
  std::string pipe_cfg, pipe_out, pipe_model = "loose";
  std::size_t pipe_iters = 100, pipe_ref = 0;
  double pipe_tau = kTauThDefault;
  bool pipe_blind = false;
  auto* c_pipe = app.add_subcommand("pipeline", "simulate, fit, extract, and score");
  c_pipe->add_option("scenario", pipe_cfg, "scenario config file")->required();
  c_pipe->add_option("--model", pipe_model, "cacgmm | tight | loose");
  c_pipe->add_option("--iters", pipe_iters, "EM iterations");
  c_pipe->add_option("--tau", pipe_tau, "mask threshold");
  c_pipe->add_option("--ref", pipe_ref, "beamformer reference channel");
  c_pipe->add_flag("--blind", pipe_blind, "use blind instead of oracle initialization");
  c_pipe->add_option("-o,--output", pipe_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n" << kUsage;
    return 1;
  }

  try {
    if (c_sim->parsed()) run_simulate(sim_cfg, sim_out);
    if (c_init->parsed()) run_init(init_obs, init_oracle, init_out, init_speakers, init_seed);
    if (c_fit->parsed()) run_fit(fit_model, fit_obs, fit_init, fit_iters, fit_seed, fit_out);
    if (c_masks->parsed()) run_masks(masks_state, masks_tau, masks_out);
    if (c_bf->parsed()) run_beamform(bf_obs, bf_masks, bf_ref, bf_out);
    if (c_dia->parsed()) run_diarize(dia_in, dia_out);
    if (c_eval->parsed()) run_eval(eval_dir, eval_truth, eval_out);
    if (c_pipe->parsed())
      run_pipeline(pipe_cfg, pipe_out, pipe_model, pipe_iters, pipe_blind, pipe_tau, pipe_ref);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
