#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "radpipe/losses.hpp"
#include "radpipe/model.hpp"
#include "radpipe/pipeline.hpp"

namespace radpipe {

enum class Objective { Mlm, Ss, Kg };

const char* objective_name(Objective o);
std::optional<Objective> objective_from_name(const std::string& name);

enum class LrSchedule { Constant, PolynomialWarmup };

struct TrainConfig {
  Objective objective = Objective::Mlm;
  size_t steps = 2000;
  size_t batch_size = 8;
  double lr = 1e-3;
  double weight_decay = 0.01;
  double warmup_frac = 0.05;
  LrSchedule schedule = LrSchedule::PolynomialWarmup;
  uint64_t run_seed = 42;
  LossWeights weights;
  LossConfig loss;
  std::optional<MaskingMode> masking;  // default: random for mlm, kg for kg
  size_t budget = 96;                  // chunk budget == max sequence length
  size_t d_model = 32;
  size_t gen_d_model = 0;              // generator width; 0 = same as d_model
  size_t ffn_mult = 2;
  double holdout_frac = 0.1;
  size_t eval_every = 100;
  size_t patience = 3;                 // eval rounds without improvement
  double reg_tau = 1.0;
  std::string reference_prefix;        // "<prefix>.gen.bin"/"<prefix>.disc.bin"
  std::string reference_vocab;         // vocabulary of the frozen general encoder
  std::string out_dir;                 // checkpoints and diagnostics; may be empty

  nlohmann::json to_json() const;
};

struct TrainStepLog {
  size_t step = 0;
  double gen_loss = 0, disc_loss = 0, kg_loss = 0, reg_gen = 0, reg_disc = 0;
  double total = 0;
};

struct TrainEvalLog {
  size_t step = 0;
  double holdout_loss = 0;
  double metric = 0;  // RTD AUC for mlm/kg, section accuracy for ss
};

struct TrainReport {
  nlohmann::json config;
  std::vector<TrainStepLog> curve;
  std::vector<TrainEvalLog> evals;
  size_t steps_run = 0;
  std::optional<size_t> early_stopped_at;
  double rtd_auc = 0;
  double section_accuracy = 0;
  std::vector<std::string> checkpoints;  // file names relative to out_dir

  nlohmann::json to_json() const;
  std::string to_json_string() const;
};

/// AdamW over a parameter registry (decoupled weight decay, bias correction).
class AdamW {
 public:
  AdamW(std::vector<TinyEncoder::Param>* params, double beta1 = 0.9, double beta2 = 0.999,
        double eps = 1e-8, double weight_decay = 0.01);
  void step(double lr);

 private:
  std::vector<TinyEncoder::Param>* params_;
  double beta1_, beta2_, eps_, weight_decay_;
  size_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

double schedule_lr(const TrainConfig& cfg, size_t step);

/// Runs the selected objective over the preprocessed corpus. Deterministic:
/// given the config, the batch sequence, losses, and the report are a pure
/// function of the inputs. A non-finite loss aborts with a diagnostic dump.
TrainReport train(const TrainConfig& cfg, const std::vector<SectionedReport>& corpus,
                  const Taxonomy& tax, const Vocabulary& vocab);

}  // namespace radpipe
