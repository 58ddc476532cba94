#pragma once

#include <cstdint>
#include <string>

namespace doctor {

// Synthetic encoder geometry. Encoders are frozen stand-ins for pretrained
// feature extractors: seeded random linear maps plus a fixed tanh.
struct EncoderConfig {
  int frame_h = 6;
  int frame_w = 6;
  int patch = 3;         // square patch edge; frame must tile evenly
  int audio_len = 12;    // raw audio vector length
  int audio_dim = 12;    // d_a
  int video_dim = 12;    // d_v, per patch row
  int text_dim = 12;     // d_t
  std::uint64_t seed = 101;

  int patches_per_frame() const { return (frame_h / patch) * (frame_w / patch); }
};

// Everything tunable in one place; JSON config files map onto these fields
// and command-line flags override individual entries.
struct RunConfig {
  std::uint64_t seed = 1;

  // shared representation space
  int shared_dim = 32;

  // encoders
  EncoderConfig enc;

  // distillation
  double beta_alpha = 1.0;  // Beta(alpha, alpha) mixing concentration
  double tau = 0.07;        // contrastive temperature
  long sma_t0 = 10;         // teacher averaging start iteration

  // spatial block
  int prompt_dim = 16;
  int max_boxes = 4;
  double density_threshold = 0.3;

  // temporal block
  int tpe_bins = 8;

  // diffusion
  int diff_steps = 10;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  int step_embed_dim = 8;

  // training
  double lr = 1e-3;
  int epochs = 30;
  int batch_size = 8;
  double loss_alpha = 0.1;   // semantic/emotional branch weight
  double loss_beta = 3.0;    // spatial/temporal branch weight
  double loss_gamma = 0.05;  // distillation weight
  double lambda_diff = 1.0;  // denoiser objective weight
  double decision_threshold = 0.1;
  bool calibrate_threshold = true;
  double val_fraction = 0.2;

  // benchmark generator
  int n_domains = 9;
  int per_domain = 200;
  double gen_noise = 0.25;
  double motif_strength = 0.9;
  double bias_strength = 0.7;
  double trap_bias = 1.0;
  double subtitle_strength = 2.5;
  int trap_domain = -1;  // -1: last domain
  int lodo_seeds = 5;

  int resolved_trap_domain() const { return trap_domain >= 0 ? trap_domain : n_domains - 1; }
  void validate() const;  // throws std::invalid_argument on bad values
};

// JSON round-trip. load_config merges file values over the defaults.
RunConfig load_config(const std::string& path);
std::string config_to_json(const RunConfig& cfg);
void apply_json_overrides(RunConfig& cfg, const std::string& json_text);

}  // namespace doctor
