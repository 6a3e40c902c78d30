// Copyright 2026-present the lmforge project
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

#pragma once

#include <condition_variable>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "lmforge/core/factory.hpp"
#include "lmforge/embeddings/vector_file.hpp"
#include "lmforge/service/server.hpp"
#include "lmforge/tokenizer/masking.hpp"
#include "lmforge/trainers/model_io.hpp"
#include "lmforge/util/csv.hpp"

namespace lmforge::cli {

using nlohmann::json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitUsage = 2;

namespace detail {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// `serve` blocks on this until request_shutdown(); only the serving thread
// touches the server itself.
inline std::mutex server_mu;
inline std::condition_variable shutdown_cv;
inline bool is_serving = false;
inline bool shutdown_requested = false;

inline std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::Io, "cannot open " + path, path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_text(const std::string& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(Errc::Io, "cannot open " + path + " for writing", path);
    out << text;
}

inline std::vector<std::string> read_lines(const std::string& path) {
    std::istringstream in(read_text(path));
    std::vector<std::string> out;
    for (std::string line; std::getline(in, line);) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!is_blank(line)) out.push_back(line);
    }
    return out;
}

inline std::vector<std::string> read_column(const std::string& path, const std::string& column) {
    const auto table = parse_csv_table(read_text(path));
    const auto c = table.column(column);
    std::vector<std::string> out;
    for (const auto& row : table.rows) out.push_back(row[c]);
    if (out.empty()) fail(Errc::EmptyDataset, path + " has no rows", path);
    return out;
}

/// Flags shared by every subcommand that talks to a model endpoint.
struct ProviderFlags {
    std::string url;
    std::string model;
    std::string kind;
    std::string api_key_env;
    double timeout = 0;

    void attach(CLI::App* sub, const std::string& url_flag = "--provider", const std::string& model_flag = "--model") {
        sub->add_option(url_flag, url, "Endpoint base URL (mock://local?seed=S&dim=D for the in-process mock)");
        sub->add_option(model_flag, model, "Model identifier");
        sub->add_option("--provider-kind", kind, "openai | ollama | mock");
        sub->add_option("--api-key-env", api_key_env, "Environment variable holding the API key");
        sub->add_option("--timeout", timeout, "Request timeout in seconds");
    }

    json config(const std::string& flag = "--provider") const {
        if (url.empty()) throw UsageError(flag + " is required");
        json c = {{"provider_url", url}};
        if (!model.empty()) c["model"] = model;
        if (!kind.empty()) c["provider.kind"] = kind;
        if (!api_key_env.empty()) {
            const char* v = std::getenv(api_key_env.c_str());
            if (!v || !*v) fail(Errc::ConfigValidation, "environment variable " + api_key_env + " is unset", "api-key-env");
            c["provider.api_key"] = v;
        }
        if (timeout > 0) c["provider.timeout"] = timeout;
        return c;
    }
};

/// Training flags, mapped onto the unified training keys.
struct TrainingFlags {
    std::optional<std::uint32_t> epochs, batch_size;
    std::optional<double> lr, eval_fraction, max_grad_norm;
    std::optional<std::int64_t> seed;
    std::optional<std::string> optim, loss_weights;

    void attach(CLI::App* sub, bool with_loss_weights) {
        sub->add_option("--epochs", epochs, "num_train_epochs");
        sub->add_option("--lr", lr, "learning_rate");
        sub->add_option("--batch-size", batch_size, "Mini-batch size");
        sub->add_option("--seed", seed, "Seed for the split, initialisation and shuffling");
        sub->add_option("--eval-fraction", eval_fraction, "Held-out fraction in (0, 1)");
        sub->add_option("--optim", optim, "adam | sgd");
        sub->add_option("--max-grad-norm", max_grad_norm, "Global gradient clip");
        if (with_loss_weights) sub->add_option("--loss-weights", loss_weights, "w_mse,w_cos (sums to 1)");
    }

    json config() const {
        json c = json::object();
        if (epochs) c["num_train_epochs"] = *epochs;
        if (lr) c["learning_rate"] = *lr;
        if (batch_size) c["batch_size"] = *batch_size;
        if (seed) c["seed"] = *seed;
        if (eval_fraction) c["eval_fraction"] = *eval_fraction;
        if (optim) c["optim"] = *optim;
        if (max_grad_norm) c["max_grad_norm"] = *max_grad_norm;
        if (loss_weights) {
            const auto parts = split(*loss_weights, ',');
            if (parts.size() != 2) throw UsageError("--loss-weights expects two comma-separated numbers");
            try {
                c["loss_weights"] = {std::stod(parts[0]), std::stod(parts[1])};
            } catch (const std::exception&) {
                throw UsageError("--loss-weights expects two comma-separated numbers");
            }
        }
        return c;
    }
};

inline json merge(json a, const json& b) {
    for (const auto& [k, v] : b.items()) a[k] = v;
    return a;
}

template <class T>
T& handle_as(TaskHandle&& h, T& slot) {
    slot = std::get<T>(std::move(h));
    return slot;
}

/// Finds the subcommand and the --config value without full parsing.
inline std::pair<std::string, std::string> prescan(const std::vector<std::string>& args) {
    std::string sub, config;
    for (std::size_t i = 0; i < args.size(); ++i) {
        const auto& a = args[i];
        if (a == "--config") {
            if (i + 1 < args.size()) config = args[++i];
        } else if (starts_with(a, "--config=")) {
            config = a.substr(9);
        } else if (sub.empty() && !a.empty() && a[0] != '-') {
            sub = a;
        }
    }
    return {sub, config};
}

/// Config-file keys become option defaults, so flags still win.
inline void apply_config_file(CLI::App* sub, const std::string& path) {
    json cfg;
    try {
        cfg = json::parse(read_text(path));
    } catch (const json::parse_error& e) {
        fail(Errc::ConfigValidation, "config file " + path + " is not valid JSON: " + e.what(), "config");
    }
    if (!cfg.is_object()) fail(Errc::ConfigValidation, "config file must hold a JSON object", "config");
    for (const auto& [key, value] : cfg.items()) {
        std::string flag = key;
        std::replace(flag.begin(), flag.end(), '_', '-');
        auto* opt = sub->get_option_no_throw("--" + flag);
        if (!opt) throw UsageError("unknown config key '" + key + "' for " + sub->get_name());
        if (value.is_array()) {
            std::vector<std::string> items;
            for (const auto& v : value) items.push_back(v.is_string() ? v.get<std::string>() : v.dump());
            opt->default_val(items);
        } else {
            opt->default_val(value.is_string() ? value.get<std::string>() : value.dump());
        }
    }
}

inline json hit_json(const SearchHit& h) {
    return {{"doc_id", h.doc_id}, {"score", h.score}, {"text", h.text}, {"metadata", h.metadata}};
}

inline std::string index_sidecar(const std::string& index_path) { return index_path + ".provider.json"; }

}  // namespace detail

/// Asks a running `serve` invocation to stop.
inline void request_shutdown() {
    {
        std::lock_guard lock(detail::server_mu);
        detail::shutdown_requested = true;
    }
    detail::shutdown_cv.notify_all();
}

/// True while a `serve` invocation is running.
inline bool serving() {
    std::lock_guard lock(detail::server_mu);
    return detail::is_serving;
}

/// Runs one invocation. `args` excludes the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    using namespace detail;
    CLI::App app{"lmforge: language-model operations toolkit", "lmforge"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string config_path;
    bool json_out = false, verbose = false;
    app.add_option("--config", config_path, "JSON file whose keys supply flag defaults");
    app.add_flag("--json", json_out, "Machine-readable output");
    app.add_flag("--verbose", verbose, "Progress details on stderr");

    auto log = [&](const std::string& msg) {
        if (verbose) err << msg << '\n';
    };
    json result;
    std::string human;

    // serve
    auto* serve = app.add_subcommand("serve", "Chat gateway with server-side memory");
    ProviderFlags serve_p;
    serve_p.attach(serve);
    std::string host = "127.0.0.1", auth_env, journal, ui_dir, port_file;
    int port = 8000;
    bool production = false;
    std::size_t workers = 16;
    serve->add_option("--host", host);
    serve->add_option("--port", port, "0 picks a free port");
    serve->add_option("--auth-token-env", auth_env, "Environment variable holding the bearer token");
    serve->add_option("--memory-journal", journal, "Append-only conversation journal");
    serve->add_option("--ui-dir", ui_dir, "Serve UI assets from this directory instead of the built-in page");
    serve->add_option("--port-file", port_file, "Write the bound port here once listening");
    serve->add_option("--workers", workers);
    serve->add_flag("--production", production, "Refuse to start without authentication");

    // label
    auto* label = app.add_subcommand("label", "Label texts with a chat model");
    ProviderFlags label_p;
    label_p.attach(label);
    std::string schema_path, label_in, label_out, text_col = "text";
    bool multi_label = false;
    std::size_t concurrency = 4;
    label->add_option("--schema", schema_path, "{\"labels\": {name: condition}, \"multi_label\": bool}");
    label->add_option("--in", label_in, "CSV with a text column");
    label->add_option("--out", label_out, "Output CSV");
    label->add_option("--text-col", text_col);
    label->add_flag("--multi-label", multi_label);
    label->add_option("--concurrency", concurrency);

    // embed
    auto* embed = app.add_subcommand("embed", "Embed texts into a vector file");
    ProviderFlags embed_p;
    embed_p.attach(embed);
    std::string embed_in, embed_out;
    std::size_t embed_batch_size = 64;
    embed->add_option("--in", embed_in, "CSV with a text column");
    embed->add_option("--out", embed_out, "Vector file");
    embed->add_option("--text-col", text_col);
    embed->add_option("--batch-size", embed_batch_size);

    // index
    auto* index = app.add_subcommand("index", "Build a vector index from a CSV");
    ProviderFlags index_p;
    index_p.attach(index);
    std::string index_in, index_out, backend = "flat", vectors_in;
    std::optional<std::uint32_t> M, ef_construction, ef_search;
    std::optional<std::uint64_t> index_seed;
    index->add_option("--in", index_in, "CSV; other columns become metadata");
    index->add_option("--out", index_out, "Index file");
    index->add_option("--text-col", text_col);
    index->add_option("--backend", backend, "flat | hnsw");
    index->add_option("--vectors", vectors_in, "Precomputed vector file (skips embedding)");
    index->add_option("--M", M);
    index->add_option("--ef-construction", ef_construction);
    index->add_option("--ef-search", ef_search);
    index->add_option("--seed", index_seed);

    // search
    auto* search = app.add_subcommand("search", "Query a vector index");
    ProviderFlags search_p;
    search_p.attach(search);
    std::string search_index, query;
    std::size_t k = 10;
    std::vector<std::string> filters;
    std::optional<std::uint32_t> search_ef;
    search->add_option("--index", search_index);
    search->add_option("--query", query);
    search->add_option("--k", k);
    search->add_option("--filter", filters, "key=value metadata equality (repeatable)");
    search->add_option("--ef-search", search_ef);

    // rerank
    auto* rerank = app.add_subcommand("rerank", "Order documents by relevance to a query");
    ProviderFlags rerank_p;
    rerank_p.attach(rerank);
    std::string rerank_query, docs_path, rerank_backend = "embedding";
    std::optional<std::size_t> top_n;
    std::size_t rerank_concurrency = 4;
    rerank->add_option("--query", rerank_query);
    rerank->add_option("--docs", docs_path, "One document per line");
    rerank->add_option("--backend", rerank_backend, "embedding | llm-judge | http");
    rerank->add_option("--top-n", top_n);
    rerank->add_option("--concurrency", rerank_concurrency);

    // train-tokenizer
    auto* ttok = app.add_subcommand("train-tokenizer", "Train a byte-level BPE tokenizer");
    std::string corpus, tok_out;
    TokenizerConfig tok_cfg;
    ttok->add_option("--corpus", corpus, "UTF-8 text, one document per line");
    ttok->add_option("--vocab-size", tok_cfg.vocab_size);
    ttok->add_option("--min-frequency", tok_cfg.min_frequency);
    ttok->add_option("--max-length", tok_cfg.max_length);
    ttok->add_option("--out", tok_out, "Output directory");

    // mask
    auto* mask = app.add_subcommand("mask", "Apply MLM masking to token id sequences");
    std::string mask_in, mask_out, mask_tokenizer;
    MaskingConfig mcfg;
    mask->add_option("--in", mask_in, "One whitespace-separated id sequence per line");
    mask->add_option("--out", mask_out, "JSON lines output (stdout when omitted)");
    mask->add_option("--mlm-probability", mcfg.mlm_probability);
    mask->add_option("--seed", mcfg.rng_seed);
    mask->add_option("--mask-token-id", mcfg.mask_token_id);
    mask->add_option("--vocab-size", mcfg.vocab_size, "Upper bound for random replacements");
    mask->add_option("--tokenizer", mask_tokenizer, "Tokenizer directory; supplies vocab-size");

    // train-classifier
    auto* tcls = app.add_subcommand("train-classifier", "Train a softmax head over provider embeddings");
    ProviderFlags tcls_p;
    tcls_p.attach(tcls);
    TrainingFlags tcls_t;
    tcls_t.attach(tcls, false);
    std::string csv_path, label_col = "label", model_out;
    tcls->add_option("--csv", csv_path);
    tcls->add_option("--text-col", text_col);
    tcls->add_option("--label-col", label_col);
    tcls->add_option("--out", model_out, "Model file");

    // classify
    auto* cls = app.add_subcommand("classify", "Predict labels with a trained head");
    ProviderFlags cls_p;
    cls_p.attach(cls, "--provider", "--provider-model");
    std::string model_in, cls_in, cls_out;
    cls->add_option("--model", model_in, "Model file from train-classifier");
    cls->add_option("--in", cls_in, "CSV with a text column");
    cls->add_option("--text-col", text_col);
    cls->add_option("--out", cls_out, "Output CSV");

    // distill
    auto* dist = app.add_subcommand("distill", "Fit a student to a teacher's embedding space");
    ProviderFlags dist_p;
    dist_p.attach(dist, "--teacher");
    TrainingFlags dist_t;
    dist_t.attach(dist, true);
    std::string student = "linear", texts_path, dist_out;
    std::size_t in_dim = 64, hidden = 64;
    dist->add_option("--student", student, "linear | mlp1");
    dist->add_option("--in-dim", in_dim, "Hashed featurizer width");
    dist->add_option("--hidden", hidden, "mlp1 hidden width");
    dist->add_option("--texts", texts_path, "CSV with a text column");
    dist->add_option("--text-col", text_col);
    dist->add_option("--out", dist_out, "Model file");

    auto need = [](const std::string& v, const char* flag) {
        if (v.empty()) throw UsageError(std::string(flag) + " is required");
    };

    try {
        const auto [sub_name, cfg_file] = prescan(args);
        if (!sub_name.empty() && !app.get_subcommand_no_throw(sub_name)) {
            err << "usage error: unknown subcommand '" << sub_name << "'\n\n" << app.help();
            return kExitUsage;
        }
        if (!cfg_file.empty()) {
            for (auto* s : app.get_subcommands({})) {
                if (s->get_name() == sub_name) apply_config_file(s, cfg_file);
            }
        }
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);

        if (serve->parsed()) {
            if (serve_p.url.empty()) throw UsageError("--provider is required");
            auto task = std::get<GeneratorTask>(create_task(
                TaskKind::Generator,
                merge(serve_p.config(), journal.empty() ? json::object() : json{{"memory_journal", journal}})));
            AuthChain auth;
            if (!auth_env.empty()) {
                auto hook = bearer_token_from_env(auth_env.c_str());
                if (!hook) fail(Errc::ConfigValidation, "environment variable " + auth_env + " is unset", "auth-token-env");
                auth.add(*hook);
            }
            ServerConfig sc;
            sc.host = host;
            sc.port = port;
            sc.production = production;
            sc.worker_threads = workers;
            if (!ui_dir.empty()) sc.ui_dir = ui_dir;
            ChatServer server(task.service, auth, sc);
            {
                std::lock_guard lock(server_mu);
                is_serving = true;
                shutdown_requested = false;
            }
            int bound = 0;
            try {
                bound = server.start();
            } catch (...) {
                std::lock_guard lock(server_mu);
                is_serving = false;
                throw;
            }
            if (json_out) {
                out << json{{"host", host}, {"port", bound}}.dump() << std::endl;
            } else {
                out << "listening on http://" << host << ":" << bound << std::endl;
            }
            if (!port_file.empty()) write_text(port_file, std::to_string(bound));
            {
                std::unique_lock lock(server_mu);
                shutdown_cv.wait(lock, [] { return shutdown_requested; });
                is_serving = false;
            }
            server.stop();
            return kExitOk;
        }

        if (label->parsed()) {
            need(schema_path, "--schema");
            need(label_in, "--in");
            auto cfg = label_p.config();
            const auto schema = label_schema_from_json(read_text(schema_path));
            json labels = json::array();
            for (const auto& [n, c] : schema.labels) labels.push_back({n, c});
            cfg["labels"] = labels;
            cfg["multi_label"] = schema.multi_label || multi_label;
            cfg["concurrency"] = concurrency;
            auto task = std::get<LabellerTask>(create_task(TaskKind::Labeller, cfg));
            const auto texts = read_column(label_in, text_col);
            log("labelling " + std::to_string(texts.size()) + " texts");
            const auto entries = task.labeller->label_batch(texts, task.concurrency);
            if (!label_out.empty()) write_text(label_out, label_results_csv(entries, texts));
            result = json::array();
            std::size_t failed = 0;
            for (std::size_t i = 0; i < entries.size(); ++i) {
                const auto& e = entries[i];
                json row = {{"text", texts[i]}};
                if (e.result) {
                    row["labels"] = e.result->labels;
                    row["retries"] = e.result->retries;
                } else {
                    ++failed;
                    row["error"] = std::string(errc_name(*e.error_code));
                    row["message"] = e.error;
                }
                result.push_back(row);
            }
            human = "labelled " + std::to_string(entries.size() - failed) + " of " + std::to_string(entries.size()) +
                    " texts" + (label_out.empty() ? "" : " -> " + label_out);
            if (label_out.empty() && !json_out) human = label_results_csv(entries, texts);
        } else if (embed->parsed()) {
            need(embed_in, "--in");
            need(embed_out, "--out");
            auto task = std::get<EmbedderTask>(
                create_task(TaskKind::Embedder, merge(embed_p.config(), {{"batch_size", embed_batch_size}})));
            const auto texts = read_column(embed_in, text_col);
            const auto vecs = embed_batch(*task.provider, texts, task.batch_size);
            save_vectors(embed_out, vecs);
            result = {{"count", vecs.size()}, {"dim", vecs.front().dim()}, {"out", embed_out}};
            human = "wrote " + std::to_string(vecs.size()) + " vectors of dim " + std::to_string(vecs.front().dim()) +
                    " to " + embed_out;
        } else if (index->parsed()) {
            need(index_in, "--in");
            need(index_out, "--out");
            const auto table = parse_csv_table(read_text(index_in));
            const auto tc = table.column(text_col);
            if (table.rows.empty()) fail(Errc::EmptyDataset, index_in + " has no rows", index_in);
            std::vector<std::string> texts;
            for (const auto& r : table.rows) texts.push_back(r[tc]);
            std::vector<EmbeddingVector> vecs;
            json provider_cfg;
            if (!vectors_in.empty()) {
                vecs = load_vectors(vectors_in);
                if (vecs.size() != texts.size()) {
                    fail(Errc::ShapeMismatch, "vector file has " + std::to_string(vecs.size()) + " rows, CSV has " +
                                                  std::to_string(texts.size()));
                }
            } else {
                provider_cfg = index_p.config();
                auto emb = std::get<EmbedderTask>(create_task(TaskKind::Embedder, provider_cfg));
                vecs = embed_batch(*emb.provider, texts, emb.batch_size);
            }
            json scfg = {{"index_type", backend}, {"dim", vecs.front().dim()}};
            if (M) scfg["M"] = *M;
            if (ef_construction) scfg["ef_construction"] = *ef_construction;
            if (ef_search) scfg["ef_search"] = *ef_search;
            if (index_seed) scfg["seed"] = *index_seed;
            auto task = std::get<SearcherTask>(create_task(TaskKind::Searcher, scfg));
            for (std::size_t i = 0; i < texts.size(); ++i) {
                Metadata meta = Metadata::object();
                for (std::size_t c = 0; c < table.header.size(); ++c) {
                    if (c != tc) meta[table.header[c]] = table.rows[i][c];
                }
                task.index->add({i, texts[i], meta, vecs[i]});
            }
            task.index->save(index_out);
            if (!provider_cfg.is_null()) {
                provider_cfg.erase("provider.api_key");
                write_text(index_sidecar(index_out), provider_cfg.dump(2));
            }
            result = {{"count", texts.size()}, {"dim", vecs.front().dim()}, {"backend", backend}, {"out", index_out}};
            human = "indexed " + std::to_string(texts.size()) + " documents (" + backend + ") -> " + index_out;
        } else if (search->parsed()) {
            need(search_index, "--index");
            need(query, "--query");
            if (k == 0) throw UsageError("--k must be positive");
            json pcfg;
            if (!search_p.url.empty()) {
                pcfg = search_p.config();
            } else if (std::filesystem::exists(index_sidecar(search_index))) {
                pcfg = json::parse(read_text(index_sidecar(search_index)));
            } else {
                throw UsageError("--provider is required (no provider recorded next to the index)");
            }
            auto emb = std::get<EmbedderTask>(create_task(TaskKind::Embedder, pcfg));
            const auto idx = VectorIndex::load(search_index, search_ef);
            const std::vector<std::string> q{query};
            const auto qv = embed_batch(*emb.provider, q, 1).front();
            Filter filter;
            if (!filters.empty()) {
                std::vector<Filter> parts;
                for (const auto& f : filters) {
                    const auto eq = f.find('=');
                    if (eq == std::string::npos || eq == 0) throw UsageError("--filter expects key=value, got '" + f + "'");
                    parts.push_back(metadata_equals(f.substr(0, eq), f.substr(eq + 1)));
                }
                filter = [parts](const DocumentView& d) {
                    return std::all_of(parts.begin(), parts.end(), [&](const Filter& p) { return p(d); });
                };
            }
            const auto hits = idx.search(qv, k, filter);
            result = json::array();
            for (const auto& h : hits) {
                result.push_back(hit_json(h));
                human += std::to_string(h.doc_id) + "\t" + std::to_string(h.score) + "\t" + h.text + "\n";
            }
            if (!human.empty()) human.pop_back();
        } else if (rerank->parsed()) {
            need(rerank_query, "--query");
            need(docs_path, "--docs");
            json cfg = {{"backend", rerank_backend}};
            if (rerank_backend == "http") {
                if (rerank_p.url.empty()) throw UsageError("--provider is required");
                cfg["provider_url"] = rerank_p.url;
            } else {
                cfg = merge(cfg, rerank_p.config());
                if (rerank_backend == "llm-judge") cfg["concurrency"] = rerank_concurrency;
            }
            auto task = std::get<RerankerTask>(create_task(TaskKind::Reranker, cfg));
            const auto res = task.reranker->rerank({rerank_query, read_lines(docs_path), top_n});
            result = {{"backend", res.backend}, {"ranking", json::array()}};
            for (const auto& d : res.ranking) {
                result["ranking"].push_back({{"index", d.index}, {"score", d.score}, {"text", d.text}});
                human += std::to_string(d.score) + "\t" + d.text + "\n";
            }
            if (!human.empty()) human.pop_back();
        } else if (ttok->parsed()) {
            need(corpus, "--corpus");
            need(tok_out, "--out");
            auto task = std::get<TokenizerTrainerTask>(create_task(
                TaskKind::TokenizerTrainer, {{"vocab_size", tok_cfg.vocab_size},
                                             {"min_frequency", tok_cfg.min_frequency},
                                             {"max_length", tok_cfg.max_length}}));
            std::istringstream in(read_text(corpus));
            const auto model = train_bpe(in, task.config);
            std::filesystem::create_directories(tok_out);
            model.save(tok_out);
            result = {{"vocab_size", model.vocab_size()}, {"merges", model.merges().size()}, {"out", tok_out}};
            human = "trained " + std::to_string(model.merges().size()) + " merges (vocab " +
                    std::to_string(model.vocab_size()) + ") -> " + tok_out;
        } else if (mask->parsed()) {
            need(mask_in, "--in");
            if (!mask_tokenizer.empty()) mcfg.vocab_size = TokenizerModel::load(mask_tokenizer).vocab_size();
            DynamicMasker masker(mcfg);
            std::string lines;
            std::size_t count = 0, masked = 0;
            for (const auto& line : read_lines(mask_in)) {
                std::vector<TokenId> ids;
                std::istringstream ls(line);
                for (std::string tok; ls >> tok;) {
                    std::uint64_t v = 0;
                    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
                    if (ec != std::errc{} || p != tok.data() + tok.size() || v > 0xffffffffULL) {
                        fail(Errc::InvalidValue, "line " + std::to_string(count + 1) + ": bad token id '" + tok + "'",
                             "in", count + 1);
                    }
                    ids.push_back(TokenId(v));
                }
                const auto b = masker(ids);
                for (auto l : b.labels) masked += l != kIgnoreLabel;
                lines += json{{"input_ids", b.input_ids}, {"labels", b.labels}}.dump() + "\n";
                ++count;
            }
            if (mask_out.empty()) {
                out << lines;
                return kExitOk;
            }
            write_text(mask_out, lines);
            result = {{"sequences", count}, {"masked", masked}, {"out", mask_out}};
            human = "masked " + std::to_string(masked) + " positions in " + std::to_string(count) + " sequences -> " +
                    mask_out;
        } else if (tcls->parsed()) {
            need(csv_path, "--csv");
            need(model_out, "--out");
            auto task = std::get<ClassifierTask>(
                create_task(TaskKind::Classifier, merge(tcls_p.config(), tcls_t.config())));
            const auto data = load_dataset(csv_path, text_col, label_col);
            if (data.dropped) log("dropped " + std::to_string(data.dropped) + " rows with empty text or label");
            std::vector<std::string> names;
            for (auto l : data.labels) names.push_back(data.encoder.decode(l));
            const auto trained = train_classifier(data.texts, names, *task.provider, task.training);
            save_model(model_out, trained.head);
            const auto& r = trained.report;
            result = {{"classes", trained.head.encoder.classes()},
                      {"train_size", r.train_size},
                      {"eval_size", r.eval_size},
                      {"dropped", data.dropped},
                      {"initial_loss", r.initial_loss},
                      {"final_loss", r.final_loss},
                      {"epoch_loss", r.epoch_loss},
                      {"eval_accuracy", r.eval_accuracy ? json(*r.eval_accuracy) : json()},
                      {"eval_macro_f1", r.eval_macro_f1 ? json(*r.eval_macro_f1) : json()},
                      {"out", model_out}};
            std::ostringstream h;
            h << "trained on " << r.train_size << " examples, loss " << r.initial_loss << " -> " << r.final_loss;
            if (r.eval_accuracy) h << "; eval accuracy " << *r.eval_accuracy << ", macro-F1 " << *r.eval_macro_f1;
            h << " -> " << model_out;
            human = h.str();
        } else if (cls->parsed()) {
            need(model_in, "--model");
            need(cls_in, "--in");
            const auto head = load_classifier(model_in);
            ProviderFlags p = cls_p;
            if (p.url.empty()) {
                p.url = head.fingerprint.url;
                if (p.model.empty()) p.model = head.fingerprint.model;
            }
            auto emb = std::get<EmbedderTask>(create_task(TaskKind::Embedder, p.config()));
            const auto texts = read_column(cls_in, text_col);
            const auto res = classify(head, *emb.provider, texts);
            for (const auto& w : res.warnings) err << "warning: " << w << '\n';
            std::string csv = csv_line({"text", "label", "probabilities"});
            result = {{"predictions", json::array()}, {"warnings", res.warnings}};
            for (std::size_t i = 0; i < texts.size(); ++i) {
                const auto& pr = res.predictions[i];
                json dist = json::object();
                for (std::size_t c = 0; c < pr.probabilities.size(); ++c) {
                    dist[head.encoder.decode(c)] = pr.probabilities[c];
                }
                result["predictions"].push_back({{"text", texts[i]}, {"label", pr.label}, {"probabilities", dist}});
                csv += csv_line({texts[i], pr.label, dist.dump()});
                human += pr.label + "\t" + texts[i] + "\n";
            }
            if (!human.empty()) human.pop_back();
            if (!cls_out.empty()) write_text(cls_out, csv);
        } else if (dist->parsed()) {
            need(texts_path, "--texts");
            need(dist_out, "--out");
            json cfg = merge(dist_p.config("--teacher"), dist_t.config());
            cfg["student"] = student;
            cfg["in_dim"] = in_dim;
            cfg["hidden"] = hidden;
            auto task = std::get<MimickerTask>(create_task(TaskKind::Mimicker, cfg));
            const auto texts = read_column(texts_path, text_col);
            const auto trained = train_mimicker(task.student, task.hidden, *task.teacher, texts,
                                                hashed_bow_featurizer(task.in_dim), task.training);
            save_model(dist_out, trained.model);
            const auto& r = trained.report;
            result = {{"student", student_kind_name(task.student)},
                      {"in_dim", trained.model.spec.in_dim},
                      {"out_dim", trained.model.spec.out_dim},
                      {"train_size", r.train_size},
                      {"eval_size", r.eval_size},
                      {"initial_loss", r.initial_loss},
                      {"final_loss", r.final_loss},
                      {"heldout_mse", r.heldout_mse ? json(*r.heldout_mse) : json()},
                      {"heldout_mean_cosine", r.heldout_mean_cosine ? json(*r.heldout_mean_cosine) : json()},
                      {"out", dist_out}};
            std::ostringstream h;
            h << "student " << student_kind_name(task.student) << " loss " << r.initial_loss << " -> " << r.final_loss;
            if (r.heldout_mean_cosine) h << "; held-out mean cosine " << *r.heldout_mean_cosine;
            h << " -> " << dist_out;
            human = h.str();
        }
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        if (json_out) {
            json j = {{"error", std::string(errc_name(e.code()))}, {"message", e.what()}};
            if (!e.field().empty()) j["field"] = e.field();
            err << j.dump() << '\n';
        } else {
            err << "error: " << e.what();
            if (!e.field().empty()) err << " (field: " << e.field() << ")";
            err << '\n';
        }
        return kExitDomain;
    }
    out << (json_out ? result.dump() : human) << '\n';
    return kExitOk;
}

}  // namespace lmforge::cli
