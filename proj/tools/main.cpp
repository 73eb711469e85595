// Copyright (c) 2026 mtlab contributors
// SPDX-License-Identifier: Apache-2.0
//
// Subcommand front-end: corpus generation, training, evaluation, embedding
// export, augmentation preview, and the five-mode ablation.

#include <CLI11.hpp>

#include "mtlab/eval.hpp"
#include "mtlab/kvfile.hpp"
#include "mtlab/train.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace mtlab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

struct GenArgs {
  int langs = 4;
  int sentences = 2000;
  int vocab = 100;
  uint64_t seed = 1;
  std::string out;
  int heldout = 1000;
  int len_min = 3;
  int len_max = 8;
  double zipf = 1.1;
  double coverage = 0.6;
  bool identity_ciphers = false;
  bool force = false;
};

struct TrainArgs {
  std::string config;
  std::string mode;
  std::string out;
  std::string corpus;
  std::string resume;
  std::string name;
  std::vector<std::string> sets;
};

struct EvalArgs {
  std::string ckpt;
  std::string suite = "all";
  std::string out;
  std::string corpus;
  int max_sentences = 200;
  int retrieval_sentences = 1000;
  int beam = 1;
};

struct ExportArgs {
  std::string ckpt;
  std::string proj = "none";
  std::string out;
  std::string corpus;
  int max_sentences = 1000;
};

struct PreviewArgs {
  std::string dict;
  std::string input;
  std::string lang;
  double p = 0.9;
  uint64_t seed = 1;
  std::string out;
};

struct AblationArgs {
  std::string corpus;
  std::string out;
  std::string config;
  std::string modes = "baseline,ctl,aa,aa-ctl,full";
  std::vector<std::string> sets;
  int max_sentences = 200;
  int retrieval_sentences = 1000;
};

std::map<std::string, std::string> load_config_kv(const std::string& path,
                                                  const std::vector<std::string>& sets) {
  std::map<std::string, std::string> kv;
  if (!path.empty()) kv = read_kv_file(path);
  for (const auto& s : sets) {
    const size_t eq = s.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("--set expects key=value, got '" + s + "'");
    kv[trim(s.substr(0, eq))] = trim(s.substr(eq + 1));
  }
  return kv;
}

void require_empty_or_force(const std::string& dir, bool force) {
  if (fs::exists(dir) && !fs::is_empty(dir) && !force)
    throw DataError("output directory " + dir +
                    " is not empty (pass --force to overwrite)");
}

int run_gen_corpus(const GenArgs& a) {
  require_empty_or_force(a.out, a.force);
  GenOptions o;
  o.base_vocab_size = a.vocab;
  o.n_languages = a.langs;
  o.n_sentences = a.sentences;
  o.min_len = a.len_min;
  o.max_len = a.len_max;
  o.heldout_sentences = a.heldout;
  o.zipf_exponent = a.zipf;
  o.synonym_coverage = a.coverage;
  o.identity_ciphers = a.identity_ciphers;
  o.seed = a.seed;
  const CorpusSet cs = generate_synthetic_languages(o);
  const SynonymDictionary dict = make_synonym_dictionary(cs, a.coverage, a.seed);
  write_corpus_dir(cs, dict, a.out);
  long par_lines = 0;
  for (const auto& p : cs.parallel) par_lines += static_cast<long>(p.a.size());
  std::printf("wrote %s: %d languages, %zu parallel corpora (%ld pairs), "
              "%zu monolingual corpora, %d held-out lines\n",
              a.out.c_str(), a.langs, cs.parallel.size(), par_lines,
              cs.mono.size(), a.heldout);
  return kExitOk;
}

// Loads corpus + vocab + dictionary and launches one training run. The
// experiment manifest is written before any artifact.
int run_train(const TrainArgs& a) {
  const auto kv = load_config_kv(a.config, a.sets);
  ParsedConfig cfg = parse_configs(kv);
  if (!a.mode.empty()) apply_mode(cfg.train, a.mode);
  const std::string corpus_dir = !a.corpus.empty() ? a.corpus : cfg.corpus_dir;
  if (corpus_dir.empty())
    throw std::invalid_argument("no corpus: pass --corpus or set corpus_dir "
                                "in the config");

  const CorpusSet corpus = load_corpus_dir(corpus_dir);
  const Vocabulary vocab = Vocabulary::load(corpus_dir + "/vocab.txt");
  SynonymDictionary dict;
  if (cfg.train.use_aa)
    dict = SynonymDictionary::load(corpus_dir + "/synonyms.tsv");

  fs::create_directories(a.out);
  const std::string name =
      !a.name.empty() ? a.name : fs::path(a.out).filename().string();
  write_kv_file(a.out + "/manifest.txt",
                {{"experiment", name},
                 {"config_path", a.config.empty() ? "(defaults)" : a.config},
                 {"corpus_dir", corpus_dir},
                 {"output_dir", a.out},
                 {"mode", a.mode.empty() ? "custom" : a.mode},
                 {"use_ctl", cfg.train.use_ctl ? "1" : "0"},
                 {"use_aa", cfg.train.use_aa ? "1" : "0"},
                 {"use_mono", cfg.train.use_mono ? "1" : "0"},
                 {"seed", std::to_string(cfg.train.seed)}});

  const RunResult r =
      run_training(corpus, vocab, cfg.train.use_aa ? &dict : nullptr, cfg.model,
                   cfg.train, a.out, corpus_dir, a.resume);
  const StepInfo& last = r.history.empty() ? StepInfo{} : r.history.back();
  std::printf("trained %ld steps; final mt=%.4f ctl=%.4f combined=%.4f; "
              "checkpoint %s\n",
              cfg.train.total_steps, last.report.mt, last.report.ctl,
              last.report.combined, r.final_checkpoint.c_str());
  return kExitOk;
}

struct LoadedModel {
  LoadedCheckpoint ck;
  CorpusSet corpus;
  Vocabulary vocab;
  std::string corpus_dir;
};

LoadedModel load_model(const std::string& ckpt_path,
                       const std::string& corpus_override) {
  LoadedModel m;
  m.ck = load_checkpoint(ckpt_path, nullptr);
  m.corpus_dir = !corpus_override.empty() ? corpus_override : m.ck.corpus_dir;
  if (m.corpus_dir.empty())
    throw std::invalid_argument("checkpoint carries no corpus_dir; pass --corpus");
  m.corpus = load_corpus_dir(m.corpus_dir);
  m.vocab = Vocabulary::load(m.corpus_dir + "/vocab.txt");
  if (m.vocab.content_hash() != m.ck.vocab_hash)
    throw DataError("checkpoint: vocabulary hash mismatch (model was trained "
                    "with a different vocabulary)");
  return m;
}

void write_summary(const std::string& path, const LoadedModel& m,
                   const ScenarioSummary* bleu_sum,
                   const RetrievalSummary* retr_sum) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  char buf[160];
  out << "evaluation summary\n";
  out << "corpus: " << m.corpus_dir << "\n\n";
  if (bleu_sum) {
    out << "translation BLEU by scenario\n";
    std::snprintf(buf, sizeof(buf), "  supervised   : %7.2f  (%d directions)\n",
                  bleu_sum->supervised, bleu_sum->n_supervised);
    out << buf;
    std::snprintf(buf, sizeof(buf), "  unsupervised : %7.2f  (%d directions)\n",
                  bleu_sum->unsupervised, bleu_sum->n_unsupervised);
    out << buf;
    std::snprintf(buf, sizeof(buf), "  zero-shot    : %7.2f  (%d directions)\n",
                  bleu_sum->zero_shot, bleu_sum->n_zero_shot);
    out << buf;
    out << "\n";
  }
  if (retr_sum) {
    out << "similarity search top-1 accuracy\n";
    std::snprintf(buf, sizeof(buf), "  english-centric avg : %.4f\n",
                  retr_sum->encentric_avg);
    out << buf;
    std::snprintf(buf, sizeof(buf), "  multiway avg        : %.4f\n",
                  retr_sum->multiway_avg);
    out << buf;
    std::snprintf(buf, sizeof(buf), "  zero-shot multiway  : %.4f\n",
                  retr_sum->zero_shot_avg);
    out << buf;
  }
}

struct EvalOutcome {
  ScenarioSummary bleu;
  RetrievalSummary retr;
  bool did_bleu = false, did_retr = false;
};

EvalOutcome eval_model(const EvalArgs& a) {
  if (a.suite != "retrieval" && a.suite != "bleu" && a.suite != "all")
    throw std::invalid_argument("--suite must be retrieval, bleu, or all");
  LoadedModel m = load_model(a.ckpt, a.corpus);
  fs::create_directories(a.out);
  write_kv_file(a.out + "/manifest.txt",
                {{"experiment", fs::path(a.out).filename().string()},
                 {"checkpoint", a.ckpt},
                 {"corpus_dir", m.corpus_dir},
                 {"output_dir", a.out},
                 {"suite", a.suite}});

  EvalOutcome out;
  if (a.suite == "retrieval" || a.suite == "all") {
    out.retr = retrieval_suite(model_embedder(*m.ck.params, m.vocab), m.corpus,
                               a.retrieval_sentences);
    write_reports(a.out + "/retrieval.tsv", out.retr.per_pair);
    out.did_retr = true;
  }
  if (a.suite == "bleu" || a.suite == "all") {
    EvalOptions opt;
    opt.max_sentences = a.max_sentences;
    const auto reports =
        evaluate_directions(model_translator(*m.ck.params, m.vocab, a.beam),
                            m.corpus, all_directions(m.corpus), opt);
    write_reports(a.out + "/bleu.tsv", reports);
    out.bleu = summarize_bleu(m.corpus, reports);
    out.did_bleu = true;
  }
  write_summary(a.out + "/summary.txt", m, out.did_bleu ? &out.bleu : nullptr,
                out.did_retr ? &out.retr : nullptr);
  return out;
}

int run_eval(const EvalArgs& a) {
  eval_model(a);
  std::printf("evaluation written to %s\n", a.out.c_str());
  return kExitOk;
}

int run_export(const ExportArgs& a) {
  LoadedModel m = load_model(a.ckpt, a.corpus);
  export_representations(model_embedder(*m.ck.params, m.vocab), m.corpus, a.out,
                         a.proj, a.max_sentences);
  std::printf("representations written to %s\n", a.out.c_str());
  return kExitOk;
}

int run_preview(const PreviewArgs& a) {
  const SynonymDictionary dict = SynonymDictionary::load(a.dict);
  std::ifstream in(a.input);
  if (!in) throw DataError("cannot open " + a.input);
  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!a.out.empty()) {
    file.open(a.out, std::ios::binary);
    if (!file) throw DataError("cannot write " + a.out);
    out = &file;
  }
  std::string line;
  uint64_t line_no = 0;
  while (std::getline(in, line)) {
    const auto tokens = split_tokens(line);
    const auto augmented =
        augment(tokens, a.lang, dict, a.p,
                mix_seed({a.seed, fnv1a64("preview"), line_no}));
    std::string joined;
    for (const auto& t : augmented) {
      if (!joined.empty()) joined += ' ';
      joined += t;
    }
    (*out) << line << '\t' << joined << "\n";
    ++line_no;
  }
  return kExitOk;
}

int run_ablation(const AblationArgs& a) {
  std::vector<std::string> modes;
  {
    std::string cur;
    for (char c : a.modes + ",") {
      if (c == ',') {
        if (!cur.empty()) modes.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
  }
  if (modes.empty()) throw std::invalid_argument("--modes is empty");

  fs::create_directories(a.out);
  write_kv_file(a.out + "/manifest.txt",
                {{"experiment", fs::path(a.out).filename().string()},
                 {"corpus_dir", a.corpus},
                 {"output_dir", a.out},
                 {"modes", a.modes}});

  struct Row {
    std::string mode;
    ScenarioSummary bleu;
    RetrievalSummary retr;
  };
  std::vector<Row> rows;
  for (const auto& mode : modes) {
    TrainArgs t;
    t.config = a.config;
    t.mode = mode;
    t.corpus = a.corpus;
    t.out = a.out + "/" + mode;
    t.sets = a.sets;
    const int rc = run_train(t);
    if (rc != kExitOk) return rc;
    EvalArgs e;
    e.ckpt = t.out + "/model_final.ckpt";
    e.suite = "all";
    e.out = t.out + "/eval";
    e.corpus = a.corpus;
    e.max_sentences = a.max_sentences;
    e.retrieval_sentences = a.retrieval_sentences;
    const EvalOutcome outcome = eval_model(e);
    rows.push_back({mode, outcome.bleu, outcome.retr});
  }

  std::ofstream tsv(a.out + "/comparison.tsv", std::ios::binary);
  tsv << "mode\tbleu_supervised\tbleu_unsupervised\tbleu_zero_shot\t"
         "retrieval_encentric\tretrieval_multiway\tretrieval_zero_shot\n";
  char buf[256];
  std::string table =
      "mode        sup-BLEU  unsup-BLEU  zs-BLEU  enc-retr  mw-retr  zs-retr\n";
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%s\t%.2f\t%.2f\t%.2f\t%.4f\t%.4f\t%.4f\n",
                  r.mode.c_str(), r.bleu.supervised, r.bleu.unsupervised,
                  r.bleu.zero_shot, r.retr.encentric_avg, r.retr.multiway_avg,
                  r.retr.zero_shot_avg);
    tsv << buf;
    std::snprintf(buf, sizeof(buf),
                  "%-11s %8.2f %11.2f %8.2f %9.4f %8.4f %8.4f\n", r.mode.c_str(),
                  r.bleu.supervised, r.bleu.unsupervised, r.bleu.zero_shot,
                  r.retr.encentric_avg, r.retr.multiway_avg,
                  r.retr.zero_shot_avg);
    table += buf;
  }
  std::ofstream txt(a.out + "/comparison.txt", std::ios::binary);
  txt << table;
  std::printf("%s", table.c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"desk-scale multilingual translation lab over cipher languages"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* cmd_gen = app.add_subcommand("gen-corpus",
                                     "generate cipher-language corpora");
  cmd_gen->add_option("--langs", gen.langs, "number of languages");
  cmd_gen->add_option("--sentences", gen.sentences, "lines per parallel corpus");
  cmd_gen->add_option("--vocab", gen.vocab, "latent concepts per language");
  cmd_gen->add_option("--seed", gen.seed, "generation seed");
  cmd_gen->add_option("--out", gen.out, "output directory")->required();
  cmd_gen->add_option("--heldout", gen.heldout, "multi-way held-out lines");
  cmd_gen->add_option("--len-min", gen.len_min, "min sentence length");
  cmd_gen->add_option("--len-max", gen.len_max, "max sentence length");
  cmd_gen->add_option("--zipf", gen.zipf, "concept Zipf exponent");
  cmd_gen->add_option("--coverage", gen.coverage, "synonym dictionary coverage");
  cmd_gen->add_flag("--identity-ciphers", gen.identity_ciphers,
                    "degenerate identical ciphers");
  cmd_gen->add_flag("--force", gen.force, "overwrite a non-empty directory");

  TrainArgs train;
  auto* cmd_train = app.add_subcommand("train", "train one model");
  cmd_train->add_option("--config", train.config, "key = value config file");
  cmd_train->add_option("--mode", train.mode,
                        "baseline|ctl|aa|aa-ctl|full (ablation rows)");
  cmd_train->add_option("--out", train.out, "output directory")->required();
  cmd_train->add_option("--corpus", train.corpus, "corpus directory");
  cmd_train->add_option("--resume", train.resume, "checkpoint to resume from");
  cmd_train->add_option("--name", train.name, "experiment name");
  cmd_train->add_option("--set", train.sets, "override any config key=value");

  EvalArgs ev;
  auto* cmd_eval = app.add_subcommand("eval", "evaluate a checkpoint");
  cmd_eval->add_option("--ckpt", ev.ckpt, "checkpoint path")->required();
  cmd_eval->add_option("--suite", ev.suite, "retrieval|bleu|all");
  cmd_eval->add_option("--out", ev.out, "output directory")->required();
  cmd_eval->add_option("--corpus", ev.corpus, "corpus directory override");
  cmd_eval->add_option("--max-sentences", ev.max_sentences,
                       "BLEU sentences per direction");
  cmd_eval->add_option("--retrieval-sentences", ev.retrieval_sentences,
                       "candidates for similarity search");
  cmd_eval->add_option("--beam", ev.beam, "beam size (1 = greedy)");

  ExportArgs ex;
  auto* cmd_export = app.add_subcommand("export-emb",
                                        "export pooled representations");
  cmd_export->add_option("--ckpt", ex.ckpt, "checkpoint path")->required();
  cmd_export->add_option("--proj", ex.proj, "none|pca2");
  cmd_export->add_option("--out", ex.out, "output TSV file")->required();
  cmd_export->add_option("--corpus", ex.corpus, "corpus directory override");
  cmd_export->add_option("--max-sentences", ex.max_sentences,
                         "lines per language");

  PreviewArgs pre;
  auto* cmd_prev = app.add_subcommand("augment-preview",
                                      "show aligned augmentation on a file");
  cmd_prev->add_option("--dict", pre.dict, "synonym dictionary TSV")->required();
  cmd_prev->add_option("--input", pre.input, "input file, one sentence per line")
      ->required();
  cmd_prev->add_option("--lang", pre.lang, "language of the input")->required();
  cmd_prev->add_option("--p", pre.p, "replacement probability");
  cmd_prev->add_option("--seed", pre.seed, "seed");
  cmd_prev->add_option("--out", pre.out, "output TSV (default stdout)");

  AblationArgs ab;
  auto* cmd_ab = app.add_subcommand("ablation",
                                    "train + evaluate several modes");
  cmd_ab->add_option("--corpus", ab.corpus, "corpus directory")->required();
  cmd_ab->add_option("--out", ab.out, "output directory")->required();
  cmd_ab->add_option("--config", ab.config, "key = value config file");
  cmd_ab->add_option("--modes", ab.modes, "comma-separated mode list");
  cmd_ab->add_option("--set", ab.sets, "override any config key=value");
  cmd_ab->add_option("--max-sentences", ab.max_sentences,
                     "BLEU sentences per direction");
  cmd_ab->add_option("--retrieval-sentences", ab.retrieval_sentences,
                     "candidates for similarity search");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (app.got_subcommand(cmd_gen)) return run_gen_corpus(gen);
    if (app.got_subcommand(cmd_train)) return run_train(train);
    if (app.got_subcommand(cmd_eval)) return run_eval(ev);
    if (app.got_subcommand(cmd_export)) return run_export(ex);
    if (app.got_subcommand(cmd_prev)) return run_preview(pre);
    if (app.got_subcommand(cmd_ab)) return run_ablation(ab);
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return kExitNumeric;
  } catch (const DataError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  }
  return kExitUsage;
}
