// Command-line entry point for the full pipeline: synthetic data
// generation, vocabulary building, classifier/LM pre-training, hybrid
// training, evaluation, ablations, and one-shot transfer.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cast/checkpoint.hpp"
#include "cast/config.hpp"
#include "cast/synthetic.hpp"
#include "cast/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct MissingInputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CommonArgs {
  std::string config_path;
  std::string out_dir = "cast_out";
  std::vector<std::string> overrides;
  std::int64_t seed_flag = -1;  // -1: take the config's seed
};

struct RunContext {
  cast::KeyValueConfig cfg;
  std::uint64_t seed = 1;
  fs::path out;

  json meta(const std::string& command) const {
    json m;
    m["command"] = command;
    m["seed"] = seed;
    m["config"] = cfg.to_json();
    return m;
  }
};

RunContext make_context(const CommonArgs& args, const std::string& command) {
  RunContext ctx;
  ctx.cfg = cast::KeyValueConfig::from_file(args.config_path);
  for (const auto& ov : args.overrides) ctx.cfg.apply_override(ov);
  ctx.seed = args.seed_flag >= 0
                 ? std::uint64_t(args.seed_flag)
                 : std::uint64_t(ctx.cfg.get_int("seed", 1));
  ctx.out = args.out_dir;
  fs::create_directories(ctx.out);
  (void)command;
  return ctx;
}

std::uint64_t stage_seed(const RunContext& ctx, std::uint64_t salt) {
  return cast::splitmix64(ctx.seed ^ salt);
}

void require_file(const fs::path& p, const std::string& what) {
  if (!fs::exists(p))
    throw MissingInputError("missing " + what + ": " + p.string());
}

cast::StylePair styles_from(const cast::KeyValueConfig& cfg) {
  return {cfg.get_string("styles.a", "informal"),
          cfg.get_string("styles.b", "formal")};
}

cast::SyntheticConfig synthetic_config(const cast::KeyValueConfig& cfg) {
  cast::SyntheticConfig s;
  s.num_topics = int(cfg.get_int("synth.num_topics", s.num_topics));
  s.words_per_topic =
      int(cfg.get_int("synth.words_per_topic", s.words_per_topic));
  s.num_marker_pairs =
      int(cfg.get_int("synth.num_marker_pairs", s.num_marker_pairs));
  s.min_content_words =
      int(cfg.get_int("synth.min_content_words", s.min_content_words));
  s.max_content_words =
      int(cfg.get_int("synth.max_content_words", s.max_content_words));
  s.min_paragraph_sentences = int(
      cfg.get_int("synth.min_paragraph_sentences", s.min_paragraph_sentences));
  s.max_paragraph_sentences = int(
      cfg.get_int("synth.max_paragraph_sentences", s.max_paragraph_sentences));
  s.parallel_train = int(cfg.get_int("synth.parallel_train", s.parallel_train));
  s.parallel_dev = int(cfg.get_int("synth.parallel_dev", s.parallel_dev));
  s.parallel_test = int(cfg.get_int("synth.parallel_test", s.parallel_test));
  s.nonparallel_train =
      int(cfg.get_int("synth.nonparallel_train", s.nonparallel_train));
  s.style_classifier_pool =
      int(cfg.get_int("synth.style_pool", s.style_classifier_pool));
  s.coherence_paragraphs =
      int(cfg.get_int("synth.coherence_paragraphs", s.coherence_paragraphs));
  auto list = [&cfg](const char* key) { return cfg.get_list(key); };
  s.style_a_openers = list("synth.style_a_openers");
  s.style_b_openers = list("synth.style_b_openers");
  s.style_a_tags = list("synth.style_a_tags");
  s.style_b_leads = list("synth.style_b_leads");
  s.styles = styles_from(cfg);
  return s;
}

cast::ModelConfig model_config(const cast::KeyValueConfig& cfg,
                               int vocab_size) {
  cast::ModelConfig m;
  m.num_layers = int(cfg.get_int("model.num_layers", m.num_layers));
  m.num_heads = int(cfg.get_int("model.num_heads", m.num_heads));
  m.head_dim = int(cfg.get_int("model.head_dim", m.head_dim));
  m.ffn_dim = int(cfg.get_int("model.ffn_dim", m.ffn_dim));
  m.max_context_words =
      int(cfg.get_int("model.max_context_words", m.max_context_words));
  m.max_sentence_len =
      int(cfg.get_int("model.max_sentence_len", m.max_sentence_len));
  m.vocab_size = vocab_size;
  return m;
}

cast::ClassifierConfig classifier_config(const cast::KeyValueConfig& cfg) {
  cast::ClassifierConfig c;
  c.style_emb_dim = int(cfg.get_int("clf.style_emb_dim", c.style_emb_dim));
  c.filters_per_width =
      int(cfg.get_int("clf.filters_per_width", c.filters_per_width));
  if (cfg.has("clf.filter_widths")) {
    c.filter_widths.clear();
    for (const auto& w : cfg.get_list("clf.filter_widths"))
      c.filter_widths.push_back(std::stoi(w));
  }
  c.max_sentence_len =
      int(cfg.get_int("model.max_sentence_len", c.max_sentence_len));
  c.coh_layers = int(cfg.get_int("clf.coh_layers", c.coh_layers));
  c.coh_heads = int(cfg.get_int("clf.coh_heads", c.coh_heads));
  c.coh_head_dim = int(cfg.get_int("clf.coh_head_dim", c.coh_head_dim));
  c.coh_ffn_dim = int(cfg.get_int("clf.coh_ffn_dim", c.coh_ffn_dim));
  c.coh_max_context_words = int(
      cfg.get_int("model.max_context_words", c.coh_max_context_words));
  c.coh_max_candidate_len =
      int(cfg.get_int("model.max_sentence_len", c.coh_max_candidate_len));
  c.learning_rate = cfg.get_double("clf.learning_rate", c.learning_rate);
  c.epochs = int(cfg.get_int("clf.epochs", c.epochs));
  c.batch_size = int(cfg.get_int("clf.batch_size", c.batch_size));
  c.holdout_fraction = cfg.get_double("clf.holdout_fraction", c.holdout_fraction);
  return c;
}

cast::LmConfig lm_config(const cast::KeyValueConfig& cfg) {
  cast::LmConfig c;
  c.emb_dim = int(cfg.get_int("lm.emb_dim", c.emb_dim));
  c.hidden_dim = int(cfg.get_int("lm.hidden_dim", c.hidden_dim));
  c.learning_rate = cfg.get_double("lm.learning_rate", c.learning_rate);
  c.epochs = int(cfg.get_int("lm.epochs", c.epochs));
  c.batch_size = int(cfg.get_int("lm.batch_size", c.batch_size));
  c.holdout_fraction = cfg.get_double("lm.holdout_fraction", c.holdout_fraction);
  return c;
}

cast::GenMode gen_mode_from(const std::string& name) {
  if (name == "greedy") return cast::GenMode::kGreedy;
  if (name == "hard_sample") return cast::GenMode::kHardSample;
  if (name == "soft") return cast::GenMode::kSoft;
  throw cast::ConfigError("unknown gen mode '" + name +
                          "' (greedy|hard_sample|soft)");
}

cast::TrainingConfig training_config(const RunContext& ctx) {
  const cast::KeyValueConfig& cfg = ctx.cfg;
  cast::TrainingConfig t;
  t.batch_size = int(cfg.get_int("train.batch_size", t.batch_size));
  t.learning_rate = cfg.get_double("train.learning_rate", t.learning_rate);
  t.max_steps = int(cfg.get_int("train.max_steps", t.max_steps));
  t.eval_every = int(cfg.get_int("train.eval_every", t.eval_every));
  t.seed = ctx.seed;
  t.weights.lambda1 = cfg.get_double("train.lambda1", t.weights.lambda1);
  t.weights.lambda2 = cfg.get_double("train.lambda2", t.weights.lambda2);
  t.weights.lambda3 = cfg.get_double("train.lambda3", t.weights.lambda3);
  t.weights.lambda4 = cfg.get_double("train.lambda4", t.weights.lambda4);
  t.ablation.use_context_encoder =
      cfg.get_bool("train.use_context_encoder", true);
  t.ablation.use_coherence_loss =
      cfg.get_bool("train.use_coherence_loss", true);
  t.ablation.use_nonparallel = cfg.get_bool("train.use_nonparallel", true);
  t.gen_mode = gen_mode_from(cfg.get_string("train.gen_mode", "hard_sample"));
  t.gen_temperature = cfg.get_double("train.temperature", t.gen_temperature);
  t.btrans_first_hop_sample =
      cfg.get_bool("train.btrans_first_hop_sample", true);
  t.btrans_stop_gradient = cfg.get_bool("train.btrans_stop_gradient", false);
  return t;
}

// ---- artifact paths -------------------------------------------------------

fs::path data_dir(const RunContext& ctx) { return ctx.out / "data"; }
fs::path vocab_path(const RunContext& ctx) { return ctx.out / "vocab.txt"; }

cast::Vocabulary load_vocab_checked(const RunContext& ctx) {
  require_file(vocab_path(ctx), "vocabulary (run build-vocab first)");
  return cast::Vocabulary::load(vocab_path(ctx).string());
}

json load_checkpoint_checked(const fs::path& p, const std::string& what) {
  require_file(p, what);
  return cast::read_json_file(p.string());
}

// ---- subcommands -----------------------------------------------------------

int cmd_gen_data(const CommonArgs& args) {
  RunContext ctx = make_context(args, "gen-data");
  cast::SyntheticConfig scfg = synthetic_config(ctx.cfg);
  cast::SyntheticBenchmark bench =
      cast::generate_synthetic_benchmark(scfg, stage_seed(ctx, 0x67656eULL));

  fs::create_directories(data_dir(ctx));
  const auto dir = data_dir(ctx);
  cast::save_parallel((dir / "parallel_train.jsonl").string(), bench.train,
                      bench.styles);
  cast::save_parallel((dir / "parallel_dev.jsonl").string(), bench.dev,
                      bench.styles);
  cast::save_parallel((dir / "parallel_test.jsonl").string(), bench.test,
                      bench.styles);
  cast::save_nonparallel((dir / "nonparallel_train.jsonl").string(),
                         bench.nonparallel_train, bench.styles);
  cast::save_nonparallel((dir / "style_pool.jsonl").string(),
                         bench.style_classifier_pool, bench.styles);
  cast::save_paragraphs((dir / "paragraphs.jsonl").string(),
                        bench.coherence_paragraphs);

  json oracle;
  oracle["oracle"] = bench.oracle.to_json();
  oracle["styles"] = {{"a", bench.styles.a}, {"b", bench.styles.b}};
  oracle["topic_lexicons"] = bench.topic_lexicons;
  oracle["glue_words"] = bench.glue_words;
  oracle["meta"] = ctx.meta("gen-data");
  cast::write_json_file((dir / "oracle.json").string(), oracle);
  cast::write_json_file((dir / "gen_meta.json").string(),
                        ctx.meta("gen-data"));

  std::cout << "gen-data: wrote " << bench.train.size() << "/"
            << bench.dev.size() << "/" << bench.test.size()
            << " parallel train/dev/test, " << bench.nonparallel_train.size()
            << " non-parallel, " << bench.style_classifier_pool.size()
            << " style-pool, " << bench.coherence_paragraphs.size()
            << " paragraphs to " << dir.string() << "\n";
  return 0;
}

int cmd_build_vocab(const CommonArgs& args) {
  RunContext ctx = make_context(args, "build-vocab");
  const auto dir = data_dir(ctx);
  require_file(dir / "parallel_train.jsonl", "generated data (run gen-data)");
  const cast::StylePair styles = styles_from(ctx.cfg);

  std::vector<cast::TokenSeq> corpora;
  for (const auto& s : cast::load_parallel(
           (dir / "parallel_train.jsonl").string(), styles)) {
    corpora.push_back(s.source);
    corpora.push_back(s.reference);
    for (const auto& sent : s.context.before) corpora.push_back(sent);
    for (const auto& sent : s.context.after) corpora.push_back(sent);
  }
  for (const auto& s : cast::load_nonparallel(
           (dir / "nonparallel_train.jsonl").string(), styles))
    corpora.push_back(s.sentence);
  for (const auto& s :
       cast::load_nonparallel((dir / "style_pool.jsonl").string(), styles))
    corpora.push_back(s.sentence);
  for (const auto& p :
       cast::load_paragraphs((dir / "paragraphs.jsonl").string()))
    for (const auto& sent : p.sentences) corpora.push_back(sent);

  const int min_freq = int(ctx.cfg.get_int("vocab.min_frequency", 1));
  cast::Vocabulary vocab = cast::Vocabulary::build(corpora, min_freq);
  vocab.save(vocab_path(ctx).string());

  json meta = ctx.meta("build-vocab");
  meta["size_with_specials"] = vocab.size();
  meta["size_without_specials"] = vocab.kept_count();
  meta["min_frequency"] = min_freq;
  cast::write_json_file((ctx.out / "vocab_meta.json").string(), meta);

  std::cout << "build-vocab: " << vocab.size() << " ids ("
            << vocab.kept_count() << " tokens + specials), min_frequency="
            << min_freq << "\n";
  return 0;
}

int cmd_pretrain_style(const CommonArgs& args) {
  RunContext ctx = make_context(args, "pretrain-style");
  const cast::StylePair styles = styles_from(ctx.cfg);
  const auto dir = data_dir(ctx);
  require_file(dir / "style_pool.jsonl", "style pool (run gen-data)");
  auto data =
      cast::load_nonparallel((dir / "style_pool.jsonl").string(), styles);
  cast::Vocabulary vocab = load_vocab_checked(ctx);

  cast::PretrainReport report;
  cast::StyleClassifier clf = cast::pretrain_style_classifier(
      data, vocab, classifier_config(ctx.cfg), stage_seed(ctx, 0x737479ULL),
      &report);

  json meta = ctx.meta("pretrain-style");
  meta["held_out_accuracy"] = report.held_out_accuracy;
  meta["train_size"] = report.train_size;
  meta["held_out_size"] = report.held_out_size;
  meta["epoch_losses"] = report.epoch_losses;
  cast::write_json_file((ctx.out / "style_clf.json").string(),
                        cast::style_classifier_checkpoint(clf, meta));

  std::cout << "pretrain-style: held-out accuracy " << report.held_out_accuracy
            << "% (" << report.train_size << " train / "
            << report.held_out_size << " held out)\n";
  return 0;
}

int cmd_pretrain_coherence(const CommonArgs& args) {
  RunContext ctx = make_context(args, "pretrain-coherence");
  const auto dir = data_dir(ctx);
  require_file(dir / "paragraphs.jsonl", "paragraph pool (run gen-data)");
  auto paragraphs =
      cast::load_paragraphs((dir / "paragraphs.jsonl").string());
  cast::Vocabulary vocab = load_vocab_checked(ctx);

  const int negatives =
      int(ctx.cfg.get_int("coherence.negatives_per_positive", 1));
  auto pairs = cast::make_coherence_pairs(paragraphs, negatives,
                                          stage_seed(ctx, 0x706169ULL));

  cast::PretrainReport report;
  cast::CoherenceClassifier clf = cast::pretrain_coherence_classifier(
      pairs, vocab, classifier_config(ctx.cfg), stage_seed(ctx, 0x636f68ULL),
      &report);

  json meta = ctx.meta("pretrain-coherence");
  meta["held_out_accuracy"] = report.held_out_accuracy;
  meta["train_size"] = report.train_size;
  meta["held_out_size"] = report.held_out_size;
  meta["epoch_losses"] = report.epoch_losses;
  meta["negatives_per_positive"] = negatives;
  cast::write_json_file((ctx.out / "coherence_clf.json").string(),
                        cast::coherence_classifier_checkpoint(clf, meta));

  std::cout << "pretrain-coherence: held-out accuracy "
            << report.held_out_accuracy << "% (" << report.train_size
            << " train / " << report.held_out_size << " held out)\n";
  return 0;
}

int cmd_train_lm(const CommonArgs& args) {
  RunContext ctx = make_context(args, "train-lm");
  const cast::StylePair styles = styles_from(ctx.cfg);
  const auto dir = data_dir(ctx);
  require_file(dir / "nonparallel_train.jsonl",
               "non-parallel data (run gen-data)");
  auto data = cast::load_nonparallel(
      (dir / "nonparallel_train.jsonl").string(), styles);
  cast::Vocabulary vocab = load_vocab_checked(ctx);

  const std::string style_name =
      ctx.cfg.get_string("lm.train_style", styles.b);
  const cast::StyleLabel target = styles.label_of(style_name);
  std::vector<cast::IdSeq> sentences;
  for (const auto& s : data)
    if (s.style == target) sentences.push_back(vocab.encode(s.sentence));
  if (sentences.empty())
    throw cast::DataError("no sentences with style '" + style_name +
                          "' to train the language model on");

  cast::LmReport report;
  cast::PplLanguageModel lm =
      cast::train_ppl_lm(sentences, vocab.size(), lm_config(ctx.cfg),
                         stage_seed(ctx, 0x6c6dULL), &report);

  json meta = ctx.meta("train-lm");
  meta["train_style"] = style_name;
  meta["train_size"] = sentences.size();
  meta["held_out_perplexity"] = report.held_out_perplexity;
  meta["epoch_losses"] = report.epoch_losses;
  cast::write_json_file((ctx.out / "lm.json").string(),
                        cast::lm_checkpoint(lm, meta));

  std::cout << "train-lm: " << sentences.size() << " '" << style_name
            << "' sentences, held-out perplexity "
            << report.held_out_perplexity << "\n";
  return 0;
}

int cmd_train(const CommonArgs& args) {
  RunContext ctx = make_context(args, "train");
  const cast::StylePair styles = styles_from(ctx.cfg);
  const auto dir = data_dir(ctx);
  require_file(dir / "parallel_train.jsonl", "training data (run gen-data)");
  cast::Vocabulary vocab = load_vocab_checked(ctx);

  cast::StyleClassifier style_clf = cast::load_style_classifier(
      load_checkpoint_checked(ctx.out / "style_clf.json",
                              "style classifier checkpoint (run pretrain-style)"));
  cast::CoherenceClassifier coherence_clf = cast::load_coherence_classifier(
      load_checkpoint_checked(
          ctx.out / "coherence_clf.json",
          "coherence classifier checkpoint (run pretrain-coherence)"));

  const cast::ModelConfig mcfg = model_config(ctx.cfg, vocab.size());
  cast::TrainingConfig tcfg = training_config(ctx);

  cast::TrainData data;
  auto parallel_raw =
      cast::load_parallel((dir / "parallel_train.jsonl").string(), styles);
  auto nonparallel_raw = cast::load_nonparallel(
      (dir / "nonparallel_train.jsonl").string(), styles);
  data.parallel_train = cast::encode_parallel(parallel_raw, vocab, mcfg);
  data.nonparallel_train =
      cast::encode_nonparallel(nonparallel_raw, vocab, mcfg);
  data.dev_raw =
      cast::load_parallel((dir / "parallel_dev.jsonl").string(), styles);
  data.vocab = &vocab;

  std::ofstream losses_log(ctx.out / "losses.log");
  std::ofstream batches_log(ctx.out / "batches.log");
  std::ofstream history_log(ctx.out / "metrics_history.txt");
  const std::string header =
      "# cast train seed=" + std::to_string(ctx.seed) + "\n";
  losses_log << header;
  batches_log << header;
  history_log << header;

  cast::TrainLogs logs{&losses_log, &batches_log, &history_log};
  cast::TrainResult result =
      cast::train(tcfg, mcfg, data, &style_clf, &coherence_clf, logs);

  json checkpoint = result.best_checkpoint;
  checkpoint["meta"]["run"] = ctx.meta("train");
  cast::write_json_file((ctx.out / "cast_model.json").string(), checkpoint);
  cast::write_json_file((ctx.out / "train_meta.json").string(),
                        ctx.meta("train"));

  std::cout << "train: " << result.steps_run << " steps, best dev selection "
            << result.best_metric << " at step " << result.best_step << "\n";
  return 0;
}

int cmd_eval(const CommonArgs& args) {
  RunContext ctx = make_context(args, "eval");
  const cast::StylePair styles = styles_from(ctx.cfg);
  const auto dir = data_dir(ctx);
  cast::Vocabulary vocab = load_vocab_checked(ctx);

  cast::CastModel model = cast::load_model(load_checkpoint_checked(
      ctx.out / "cast_model.json", "model checkpoint (run train)"));
  cast::StyleClassifier style_clf = cast::load_style_classifier(
      load_checkpoint_checked(ctx.out / "style_clf.json",
                              "style classifier checkpoint"));
  cast::CoherenceClassifier coherence_clf =
      cast::load_coherence_classifier(load_checkpoint_checked(
          ctx.out / "coherence_clf.json", "coherence classifier checkpoint"));

  std::optional<cast::PplLanguageModel> lm;
  if (fs::exists(ctx.out / "lm.json"))
    lm = cast::load_lm(cast::read_json_file((ctx.out / "lm.json").string()));

  require_file(dir / "parallel_test.jsonl", "test split (run gen-data)");
  auto test =
      cast::load_parallel((dir / "parallel_test.jsonl").string(), styles);

  const bool use_context = ctx.cfg.get_bool("train.use_context_encoder", true);
  cast::EvalReport report =
      cast::evaluate_model(model, style_clf, coherence_clf,
                           lm ? &*lm : nullptr, test, vocab, use_context);

  json out = cast::report_to_json(report);
  out["meta"] = ctx.meta("eval");
  cast::write_json_file((ctx.out / "eval_report.json").string(), out);

  const std::string table = cast::format_report_table(report, "CAST");
  std::ofstream table_file(ctx.out / "eval_report.txt");
  table_file << table;
  std::cout << table;
  return 0;
}

int cmd_ablate(const CommonArgs& args) {
  RunContext ctx = make_context(args, "ablate");
  const cast::StylePair styles = styles_from(ctx.cfg);
  const auto dir = data_dir(ctx);
  cast::Vocabulary vocab = load_vocab_checked(ctx);

  cast::StyleClassifier style_clf = cast::load_style_classifier(
      load_checkpoint_checked(ctx.out / "style_clf.json",
                              "style classifier checkpoint"));
  cast::CoherenceClassifier coherence_clf =
      cast::load_coherence_classifier(load_checkpoint_checked(
          ctx.out / "coherence_clf.json", "coherence classifier checkpoint"));
  std::optional<cast::PplLanguageModel> lm;
  if (fs::exists(ctx.out / "lm.json"))
    lm = cast::load_lm(cast::read_json_file((ctx.out / "lm.json").string()));

  const cast::ModelConfig mcfg = model_config(ctx.cfg, vocab.size());
  cast::TrainingConfig tcfg = training_config(ctx);

  cast::TrainData data;
  auto parallel_raw =
      cast::load_parallel((dir / "parallel_train.jsonl").string(), styles);
  auto nonparallel_raw = cast::load_nonparallel(
      (dir / "nonparallel_train.jsonl").string(), styles);
  data.parallel_train = cast::encode_parallel(parallel_raw, vocab, mcfg);
  data.nonparallel_train =
      cast::encode_nonparallel(nonparallel_raw, vocab, mcfg);
  data.dev_raw =
      cast::load_parallel((dir / "parallel_dev.jsonl").string(), styles);
  data.vocab = &vocab;
  auto test =
      cast::load_parallel((dir / "parallel_test.jsonl").string(), styles);

  auto rows = cast::run_ablations(tcfg, mcfg, data, test, &style_clf,
                                  &coherence_clf, lm ? &*lm : nullptr);

  json out;
  out["meta"] = ctx.meta("ablate");
  out["rows"] = json::array();
  for (const auto& row : rows) {
    json r = cast::report_to_json(row.report);
    r.erase("examples");
    r["name"] = row.name;
    out["rows"].push_back(std::move(r));
  }
  cast::write_json_file((ctx.out / "ablation.json").string(), out);

  const std::string table = cast::format_ablation_table(rows);
  std::ofstream table_file(ctx.out / "ablation.txt");
  table_file << table;
  std::cout << table;
  return 0;
}

int cmd_transfer(const CommonArgs& args) {
  RunContext ctx = make_context(args, "transfer");
  const cast::StylePair styles = styles_from(ctx.cfg);
  cast::Vocabulary vocab = load_vocab_checked(ctx);
  cast::CastModel model = cast::load_model(load_checkpoint_checked(
      ctx.out / "cast_model.json", "model checkpoint (run train)"));

  std::string line;
  if (!std::getline(std::cin, line) || line.empty())
    throw cast::DataError("transfer: expected one JSONL record on stdin");
  json rec;
  try {
    rec = json::parse(line);
  } catch (const json::exception& e) {
    throw cast::DataError(std::string("transfer: invalid JSON: ") + e.what());
  }

  cast::ParallelSample sample;
  sample.source = rec.at("source").get<cast::TokenSeq>();
  if (rec.contains("context_before"))
    sample.context.before =
        rec.at("context_before").get<std::vector<cast::TokenSeq>>();
  if (rec.contains("context_after"))
    sample.context.after =
        rec.at("context_after").get<std::vector<cast::TokenSeq>>();
  sample.target_style =
      styles.label_of(rec.at("target_style").get<std::string>());
  sample.source_style = cast::opposite(sample.target_style);
  if (sample.source.empty())
    throw cast::DataError("transfer: empty source sentence");

  cast::EncodedParallel enc =
      cast::encode_sample(sample, vocab, model.config());
  const bool use_context = ctx.cfg.get_bool("train.use_context_encoder", true);
  cast::nn::Graph g;
  cast::GenOptions opts{cast::GenMode::kGreedy,
                        model.config().max_sentence_len, 1.0};
  cast::GeneratedSequence gen =
      model.transfer(g, enc.source, enc.context_flat, enc.target_style, opts,
                     nullptr, use_context);
  const cast::TokenSeq tokens = vocab.decode(gen.token_ids, /*display=*/true);
  for (std::size_t i = 0; i < tokens.size(); ++i)
    std::cout << (i ? " " : "") << tokens[i];
  std::cout << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Context-aware style transfer pipeline"};
  app.require_subcommand(1);

  std::map<std::string, std::function<int(const CommonArgs&)>> handlers = {
      {"gen-data", cmd_gen_data},
      {"build-vocab", cmd_build_vocab},
      {"pretrain-style", cmd_pretrain_style},
      {"pretrain-coherence", cmd_pretrain_coherence},
      {"train-lm", cmd_train_lm},
      {"train", cmd_train},
      {"eval", cmd_eval},
      {"ablate", cmd_ablate},
      {"transfer", cmd_transfer},
  };
  std::map<std::string, std::string> descriptions = {
      {"gen-data", "generate the synthetic benchmark splits"},
      {"build-vocab", "build the shared vocabulary from generated data"},
      {"pretrain-style", "pre-train and freeze the style classifier"},
      {"pretrain-coherence", "pre-train and freeze the coherence classifier"},
      {"train-lm", "train the perplexity language model"},
      {"train", "train the style transfer model"},
      {"eval", "evaluate the trained model on the test split"},
      {"ablate", "train and evaluate the five ablation variants"},
      {"transfer", "restyle one JSONL record from stdin"},
  };

  CommonArgs args;
  std::string chosen;
  for (auto& [name, handler] : handlers) {
    CLI::App* sub = app.add_subcommand(name, descriptions[name]);
    sub->add_option("--config", args.config_path, "config file path")
        ->required();
    sub->add_option("--seed", args.seed_flag, "seed override");
    sub->add_option("--out", args.out_dir, "artifact directory");
    sub->add_option("--override", args.overrides,
                    "config override KEY=VALUE (repeatable)");
    sub->callback([&chosen, name = name]() { chosen = name; });
  }

  CLI11_PARSE(app, argc, argv);

  try {
    return handlers.at(chosen)(args);
  } catch (const cast::ConfigError& e) {
    std::cerr << "cast " << chosen << ": config error: " << e.what() << "\n";
    return 2;
  } catch (const MissingInputError& e) {
    std::cerr << "cast " << chosen << ": " << e.what() << "\n";
    return 3;
  } catch (const cast::DataError& e) {
    std::cerr << "cast " << chosen << ": data error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "cast " << chosen << ": error: " << e.what() << "\n";
    return 1;
  }
}
