// Command-line harness: load a tree from a seeded corpus, train per-level
// models, benchmark the three GET variants and emit figure data.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 correctness-gate
// failure.

#include <cstdio>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "llsm/bloom.hpp"
#include "llsm/harness.hpp"

namespace {

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream ss(s);
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

int run(int argc, char** argv) {
    CLI::App app{"llsm: LSM-tree engine with classifier-skipped and learned Bloom filters"};
    app.require_subcommand(1);

    // load
    auto* load = app.add_subcommand("load", "build a tree from a seeded corpus");
    llsm::LoadConfig load_cfg;
    std::string load_dir;
    load->add_option("--seed", load_cfg.seed, "corpus seed");
    load->add_option("--pairs", load_cfg.pairs, "number of key-value pairs")->required();
    load->add_option("--dir", load_dir, "data directory")->required();
    load->add_option("--memtable-bytes", load_cfg.memtable_bytes, "MemTable capacity in bytes");
    load->add_option("--size-ratio", load_cfg.size_ratio, "level size ratio T");
    load->add_option("--bits-per-key", load_cfg.bits_per_key, "Bloom bits per key");

    // train
    auto* train = app.add_subcommand("train", "fit per-level models from residency labels");
    llsm::TrainConfig train_cfg;
    std::string train_dir, train_mode = "classifier", neg_ratio = "1";
    double subsample = 20.0;
    train->add_option("--dir", train_dir, "data directory")->required();
    train->add_option("--mode", train_mode, "classifier|learned")->required();
    train->add_option("--neg-ratio", neg_ratio,
                      "negatives per positive, per disk level (comma list, L1 first; "
                      "last value extends)");
    train->add_option("--subsample", subsample, "percent of keys kept on oversized levels");

    // bench
    auto* bench = app.add_subcommand("bench", "run GET workloads over the variants");
    std::string bench_dir, variants = "t,c,l", workloads = "random,sequential,l0,l1,l2,l3";
    std::string out_csv = "results.csv";
    llsm::BenchConfig bench_cfg;
    bench->add_option("--dir", bench_dir, "data directory")->required();
    bench->add_option("--variants", variants, "comma list of t|c|l");
    bench->add_option("--workloads", workloads, "comma list of workload names");
    bench->add_option("--ops", bench_cfg.n_ops, "GET operations per workload");
    bench->add_option("--out", out_csv, "output CSV path");
    bench->add_option("--present-fraction", bench_cfg.present_fraction,
                      "fraction of probes drawn from inserted keys");
    bench->add_option("--workload-seed", bench_cfg.workload_seed, "workload generator seed");

    // report
    auto* report = app.add_subcommand("report", "emit per-figure data files from a bench CSV");
    std::string report_in, report_out = "figs";
    report->add_option("--in", report_in, "bench CSV")->required();
    report->add_option("--out", report_out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    if (load->parsed()) {
        load_cfg.dir = load_dir;
        llsm::LoadSummary s = llsm::cmd_load(load_cfg);
        std::printf("loaded %llu pairs in %llu flushes, %llu compactions\n",
                    static_cast<unsigned long long>(s.pairs),
                    static_cast<unsigned long long>(s.flushes),
                    static_cast<unsigned long long>(s.compactions));
        for (std::size_t i = 0; i < s.level_entries.size(); ++i) {
            std::printf("  L%zu: %llu entries\n", i,
                        static_cast<unsigned long long>(s.level_entries[i]));
        }
        std::printf("raw corpus %.1f MB, on disk %.1f MB\n",
                    static_cast<double>(s.raw_bytes) / 1e6,
                    static_cast<double>(s.disk_bytes) / 1e6);
        std::printf("tree fingerprint %08x\n", s.fingerprint);
    } else if (train->parsed()) {
        train_cfg.dir = train_dir;
        if (train_mode == "classifier") {
            train_cfg.mode = llsm::TrainMode::kClassifier;
        } else if (train_mode == "learned") {
            train_cfg.mode = llsm::TrainMode::kLearned;
        } else {
            std::fprintf(stderr, "unknown mode: %s\n", train_mode.c_str());
            return 1;
        }
        train_cfg.neg_ratio.clear();
        for (const std::string& r : split_list(neg_ratio)) {
            train_cfg.neg_ratio.push_back(std::stod(r));
        }
        if (train_cfg.neg_ratio.empty()) train_cfg.neg_ratio.push_back(1.0);
        train_cfg.subsample_percent = subsample;
        auto infos = llsm::cmd_train(train_cfg);
        for (const auto& info : infos) {
            if (train_cfg.mode == llsm::TrainMode::kLearned) {
                std::printf("L%u: %llu positives, delta=%.4f, model %llu B, backup %llu B -> %s\n",
                            info.level, static_cast<unsigned long long>(info.positives),
                            info.delta, static_cast<unsigned long long>(info.model_bytes),
                            static_cast<unsigned long long>(info.backup_bytes),
                            info.file.c_str());
            } else {
                std::printf("L%u: %llu positives, %llu rows, model %llu B -> %s\n", info.level,
                            static_cast<unsigned long long>(info.positives),
                            static_cast<unsigned long long>(info.train_rows),
                            static_cast<unsigned long long>(info.model_bytes), info.file.c_str());
            }
        }
    } else if (bench->parsed()) {
        bench_cfg.dir = bench_dir;
        bench_cfg.out_csv = out_csv;
        bench_cfg.variants.clear();
        for (const std::string& v : split_list(variants)) {
            auto parsed = llsm::parse_variant(v);
            if (!parsed) {
                std::fprintf(stderr, "unknown variant: %s\n", v.c_str());
                return 1;
            }
            bench_cfg.variants.push_back(*parsed);
        }
        bench_cfg.workloads.clear();
        for (const std::string& w : split_list(workloads)) {
            auto parsed = llsm::parse_workload(w);
            if (!parsed) {
                std::fprintf(stderr, "unknown workload: %s\n", w.c_str());
                return 1;
            }
            bench_cfg.workloads.push_back(*parsed);
        }
        llsm::BenchResult r = llsm::cmd_bench(bench_cfg);
        std::printf("%-11s %-12s %9s %9s %9s %8s %8s %7s\n", "workload", "variant", "avg_us",
                    "p50_us", "p99_us", "checks", "bypasses", "fnr");
        for (const auto& row : r.rows) {
            std::printf("%-11s %-12s %9.2f %9.2f %9.2f %8llu %8llu %7.4f\n",
                        row.workload.c_str(), row.variant.c_str(), row.avg_us, row.p50_us,
                        row.p99_us, static_cast<unsigned long long>(row.bloom_checks),
                        static_cast<unsigned long long>(row.bloom_bypasses), row.fnr_overall);
        }
        // Monkey allocation illustration from the measured per-level probe
        // latencies (the engine itself runs flat bits per key).
        if (!r.filter_probe_us.empty()) {
            std::vector<llsm::u64> counts;
            std::vector<double> costs;
            llsm::Tree tree = llsm::Tree::open(bench_cfg.dir);
            for (const auto& [level, us] : r.filter_probe_us) {
                counts.push_back(tree.level_entries(level));
                costs.push_back(us);
            }
            if (!counts.empty()) {
                double budget = 0;
                for (llsm::u64 n : counts) budget += static_cast<double>(n) * 10.0;
                auto alloc = llsm::monkey_allocate(counts, tree.config().size_ratio, budget, costs);
                std::printf("monkey allocation at the measured probe costs "
                            "(illustration, budget %.0f bits):\n", budget);
                for (const auto& la : alloc.per_level) {
                    std::printf("  L%u: fpr=%.3g bits/key=%.2f\n", la.level, la.fpr,
                                la.bits_per_key);
                }
            }
        }
        std::printf("CSV written to %s\n", out_csv.c_str());
    } else if (report->parsed()) {
        llsm::cmd_report(report_in, report_out);
        std::printf("figure data written to %s\n", report_out.c_str());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const llsm::CorrectnessError& e) {
        std::fprintf(stderr, "correctness gate: %s\n", e.what());
        return 3;
    } catch (const llsm::DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 2;
    } catch (const llsm::IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
