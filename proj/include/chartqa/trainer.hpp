#ifndef CHARTQA_TRAINER_HPP_
#define CHARTQA_TRAINER_HPP_

#include <string>
#include <unordered_map>
#include <vector>

#include "chartqa/chart2text.hpp"
#include "chartqa/checkpoint.hpp"
#include "chartqa/qa.hpp"

namespace chartqa {

enum class TrainStage { alignment, reasoning };

std::string to_string(TrainStage stage);
TrainStage train_stage_from_string(const std::string& s);

struct TrainConfig {
    TrainStage stage = TrainStage::alignment;
    double learning_rate = 1e-6;
    int batch_size = 16;
    int epochs = 6;
    double beta1 = 0.9;
    double beta2 = 0.95;
    double weight_decay = 0.001;
    double epsilon = 1e-8;
    uint64_t seed = 0;
    bool use_chart_to_text = true;
    bool sum_reduction = false;  // restores the summed loss for fidelity runs
    double clip_norm = 1.0;      // 0 disables clipping
    std::string log_path;        // JSON-lines step log; empty disables
    long long max_steps = 0;     // 0 = run all epochs
    bool allow_skip_stage1 = false;
};

// Stage defaults: alignment 1e-6 / batch 16 / 6 epochs, reasoning 1e-5 /
// batch 8 / 8 epochs.
TrainConfig default_train_config(TrainStage stage);
void check_train_config(const TrainConfig& config);

// Decoupled-weight-decay Adam. State is keyed by parameter name and shared
// across steps; call begin_step once per optimizer step, then update each
// trainable tensor.
class AdamW {
  public:
    AdamW(double lr, double beta1, double beta2, double weight_decay, double epsilon = 1e-8);

    void begin_step() { ++t_; }
    void update(const std::string& name, Param& p);
    long long steps_taken() const { return t_; }

  private:
    struct Slot {
        Mat m;
        Mat v;
    };
    double lr_, beta1_, beta2_, weight_decay_, epsilon_;
    long long t_ = 0;
    std::unordered_map<std::string, Slot> state_;
};

// Masked next-token cross-entropy. The row at position t-1 predicts the
// token at position t; label_mask marks the predicted positions.
struct LossResult {
    double loss = 0.0;
    Mat dlogits;
    long long supervised = 0;
};

LossResult compute_loss(const Mat& logits, const InterleavedSequence& seq,
                        bool sum_reduction = false);

// One supervised sequence: a chart, a text prefix standing in the question
// slot, a target emitted after the ANS marker, and optional table text.
struct TrainExample {
    ChartSpec spec;
    std::string prefix;
    std::string target;
    std::string table_text;
};

// Stage-1 corpus: the four alignment tasks per spec; the table slot is
// always left empty.
std::vector<TrainExample> stage1_corpus(const std::vector<ChartSpec>& specs, int resolution);

// Stage-2 corpus: question/answer pairs, with the linearized table riding
// along for runs that feed it.
std::vector<TrainExample> stage2_corpus(const std::vector<ChartSpec>& specs,
                                        const std::vector<QACategory>& categories);

// Builds the interleaved sequence for one example against a checkpoint's
// models: render, encode, align, tokenize. With use_chart_to_text off the
// table slot is built empty. `features` must come from the same checkpoint.
InterleavedSequence build_example_sequence(Checkpoint& ckpt, const VisualFeatures& features,
                                           const TrainExample& example, const Tokenizer& tok,
                                           bool use_chart_to_text);

struct TrainRun {
    Checkpoint checkpoint;
    std::vector<double> step_losses;
    double final_loss = 0.0;
    long long steps = 0;
    bool interrupted = false;
};

// Stage 1: alignment. Updates connector parameters only; vision and decoder
// digests are byte-identical before and after.
TrainRun train_stage1(const std::vector<TrainExample>& data, const TrainConfig& config,
                      Checkpoint init);

// Stage 2: reasoning. Updates connector and decoder; vision digest
// unchanged. Requires completed stage-1 metadata unless allow_skip_stage1.
TrainRun train_stage2(const std::vector<TrainExample>& data, const TrainConfig& config,
                      Checkpoint init);

// Cooperative interrupt: when set, training finishes the current batch,
// records progress, and returns normally with interrupted = true.
void request_training_interrupt();
void clear_training_interrupt();
bool training_interrupt_requested();

// End-to-end inference helpers shared by the evaluator and the CLI.
struct EncodedChart {
    VisualFeatures features;
    std::string table_text;
};

EncodedChart encode_chart(Checkpoint& ckpt, const ChartSpec& spec);

std::string predict_answer(Checkpoint& ckpt, const EncodedChart& chart,
                           const std::string& question, const Tokenizer& tok,
                           bool use_chart_to_text, int max_len = 64);
std::string predict_answer(Checkpoint& ckpt, const ChartSpec& spec, const std::string& question,
                           bool use_chart_to_text, int max_len = 64);

}  // namespace chartqa

#endif  // CHARTQA_TRAINER_HPP_
