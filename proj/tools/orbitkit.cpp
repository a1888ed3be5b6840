// Command-line front end: families in, JSON verdicts and CSV tables out.
//
// Exit status: 0 success or holds, 1 fails or mismatch, 2 usage or input error.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "orbitkit/orbitkit.hpp"

namespace {

using orbitkit::InputError;
using orbitkit::json;

constexpr int kExitFail = 1;
constexpr int kExitInput = 2;

/// Raised for numeric failures (a flow that escapes, say); reported as JSON.
struct NumericFailure : std::runtime_error {
    json detail;
    NumericFailure(const std::string& what, json d) : std::runtime_error(what), detail(std::move(d)) {}
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Parses JSON text; syntax errors are reported with line and column.
json parse_json(const std::string& text, const std::string& origin) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1, col = 1;
        const std::size_t end = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
        for (std::size_t i = 0; i < end; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw InputError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": malformed JSON");
    }
}

/// A family from a JSON file, or `builtin:<case>` / `builtin:<case>:<companion>`.
orbitkit::Family load_family(const std::string& spec) {
    const std::string prefix = "builtin:";
    if (spec.rfind(prefix, 0) == 0) {
        std::string name = spec.substr(prefix.size()), companion;
        if (const auto colon = name.find(':'); colon != std::string::npos) {
            companion = name.substr(colon + 1);
            name = name.substr(0, colon);
        }
        for (auto& c : orbitkit::builtin_cases()) {
            if (c.name != name) continue;
            if (companion.empty()) return c.family;
            const auto it = c.companions.find(companion);
            if (it == c.companions.end()) throw InputError("case " + name + " has no companion \"" + companion + "\"");
            return it->second;
        }
        throw InputError("unknown built-in case \"" + name + "\"");
    }
    return orbitkit::family_from_json(parse_json(read_file(spec), spec));
}

std::vector<double> parse_list(const std::string& s, const char* what) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        char* end = nullptr;
        const double v = std::strtod(item.c_str(), &end);
        if (item.empty() || end == item.c_str() || *end != '\0' || !std::isfinite(v)) {
            throw InputError(std::string("bad number \"") + item + "\" in " + what);
        }
        out.push_back(v);
    }
    if (out.empty()) throw InputError(std::string("empty list for ") + what);
    return out;
}

orbitkit::Point parse_point(const std::string& s, std::size_t n, const char* what) {
    auto p = parse_list(s, what);
    if (p.size() != n) throw InputError(std::string(what) + " needs " + std::to_string(n) + " coordinates");
    return p;
}

/// Writes to --out when given, otherwise to stdout.
void emit(const std::string& out_path, const std::string& text) {
    if (out_path.empty()) {
        std::cout << text;
        std::cout.flush();
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw InputError("cannot write " + out_path);
    out << text;
}

unsigned resolve_threads(int flag) { return flag > 0 ? static_cast<unsigned>(flag) : orbitkit::threads_from_env(); }

int exit_for(orbitkit::Outcome o) { return o == orbitkit::Outcome::holds ? 0 : kExitFail; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"orbitkit: integrability checks for families of vector fields"};
    app.require_subcommand(1);

    int threads = 0;
    std::string out_path;
    auto common = [&](CLI::App* sub) {
        sub->add_option("--threads", threads, "worker threads (default: ORBITKIT_THREADS or 1)")->check(CLI::PositiveNumber);
        sub->add_option("--out", out_path, "write output here instead of stdout");
    };

    // bracket
    std::string family_arg;
    std::size_t bi = 0, bj = 0;
    auto* bracket = app.add_subcommand("bracket", "symbolic Lie bracket [X_i, X_j] as JSON");
    bracket->add_option("family", family_arg, "family JSON file or builtin:<case>")->required();
    bracket->add_option("i", bi)->required();
    bracket->add_option("j", bj)->required();
    common(bracket);

    // flow
    std::size_t fi = 0;
    std::string from;
    double flow_t = 0.0, flow_tol = orbitkit::kDefaultFlowTol;
    bool trace = false;
    auto* flow = app.add_subcommand("flow", "integrate one member from a point");
    flow->add_option("family", family_arg)->required();
    flow->add_option("i", fi)->required();
    flow->add_option("--from", from, "start point x1,...,xn")->required();
    flow->add_option("--t", flow_t, "flow time")->required();
    flow->add_option("--tol", flow_tol)->check(CLI::PositiveNumber);
    flow->add_flag("--trace", trace, "print every accepted step as s,x1,...,xn");
    common(flow);

    // orbit
    long budget = 2000;
    std::uint64_t seed = 0;
    double tmax = 1.0, orbit_tol = orbitkit::kDefaultFlowTol, cell = orbitkit::kDefaultCell;
    bool attainable = false;
    auto* orbit = app.add_subcommand("orbit", "sample the orbit of a point as a CSV cloud");
    orbit->add_option("family", family_arg)->required();
    orbit->add_option("--from", from)->required();
    orbit->add_option("--budget", budget)->check(CLI::PositiveNumber);
    orbit->add_option("--seed", seed);
    orbit->add_option("--tmax", tmax)->check(CLI::PositiveNumber);
    orbit->add_option("--tol", orbit_tol)->check(CLI::PositiveNumber);
    orbit->add_option("--cell", cell)->check(CLI::PositiveNumber);
    orbit->add_flag("--attainable", attainable, "nonnegative times only");
    common(orbit);

    // rank
    std::string at;
    double rank_tol = orbitkit::kDefaultRankTol;
    auto* rank = app.add_subcommand("rank", "rank of the family at a point");
    rank->add_option("family", family_arg)->required();
    rank->add_option("--at", at)->required();
    rank->add_option("--tol", rank_tol)->check(CLI::PositiveNumber);
    common(rank);

    // check
    std::string condition, params_text, params_file;
    auto* check = app.add_subcommand("check", "run one integrability checker; prints a JSON verdict");
    check->add_option("condition", condition,
                      "involutive | invariance | lobry | curve | hermann | frobenius | integrable")
        ->required();
    check->add_option("family", family_arg)->required();
    check->add_option("--params", params_text, "checker parameters as JSON text");
    check->add_option("--params-file", params_file, "checker parameters from a JSON file");
    check->add_option("--at", at, "shorthand for params.at");
    check->add_option("--budget", budget)->check(CLI::PositiveNumber);
    check->add_option("--seed", seed);
    common(check);

    // leafmap
    std::string box, res;
    long leaf_budget = 256;
    double leaf_tol = orbitkit::kDefaultRankTol;
    auto* leafmap = app.add_subcommand("leafmap", "orbit-tangent and rank maps over a grid as CSV");
    leafmap->add_option("family", family_arg)->required();
    leafmap->add_option("--box", box, "lo1,hi1,lo2,hi2,...")->required();
    leafmap->add_option("--res", res, "nodes per axis: n or n1,n2,...")->required();
    leafmap->add_option("--budget", leaf_budget, "flows per node")->check(CLI::PositiveNumber);
    leafmap->add_option("--tol", leaf_tol)->check(CLI::PositiveNumber);
    leafmap->add_option("--seed", seed);
    common(leafmap);

    // corpus
    std::vector<std::string> case_names, case_files;
    std::string dump_dir;
    bool as_json = false;
    long corpus_budget = 2000;
    auto* corpus = app.add_subcommand("corpus", "run the expectations of the example cases");
    corpus->add_option("--case", case_names, "only these cases (repeatable)");
    corpus->add_option("--file", case_files, "case JSON files to run instead of the built-in cases");
    corpus->add_option("--dump", dump_dir, "write the built-in cases as JSON files into this directory and exit");
    corpus->add_option("--budget", corpus_budget)->check(CLI::PositiveNumber);
    corpus->add_option("--seed", seed);
    corpus->add_flag("--json", as_json, "print the full report as JSON");
    common(corpus);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitInput;
    }

    try {
        const unsigned nthreads = resolve_threads(threads);

        if (*bracket) {
            const auto f = load_family(family_arg);
            const auto members = f.materialize();
            if (bi >= members.size() || bj >= members.size()) throw InputError("member index out of range");
            emit(out_path, orbitkit::field_to_json(orbitkit::lie_bracket(members[bi], members[bj])).dump(2) + "\n");
            return 0;
        }

        if (*flow) {
            const auto f = load_family(family_arg);
            const auto members = f.materialize();
            if (fi >= members.size()) throw InputError("member index out of range");
            const auto x0 = parse_point(from, f.dimension, "--from");
            std::vector<orbitkit::TraceRow> rows;
            const orbitkit::CompiledField cf(members[fi]);
            const auto r = orbitkit::integrate(cf, x0, flow_t, flow_tol, false, trace ? &rows : nullptr);
            std::ostringstream os;
            if (trace) {
                os << 's';
                for (std::size_t k = 0; k < f.dimension; ++k) os << ",x" << (k + 1);
                os << '\n';
                for (const auto& row : rows) {
                    for (std::size_t k = 0; k < row.size(); ++k) os << (k ? "," : "") << orbitkit::format_double(row[k]);
                    os << '\n';
                }
            } else {
                for (std::size_t k = 0; k < f.dimension; ++k) os << (k ? ",x" : "x") << (k + 1);
                os << '\n';
                for (std::size_t k = 0; k < r.endpoint.size(); ++k) os << (k ? "," : "") << orbitkit::format_double(r.endpoint[k]);
                os << '\n';
            }
            if (!r.ok()) {
                throw NumericFailure("flow did not complete",
                                     {{"status", orbitkit::to_string(r.status)}, {"accepted_steps", r.accepted_steps}, {"last", r.endpoint}});
            }
            emit(out_path, os.str());
            return 0;
        }

        if (*orbit) {
            const auto f = load_family(family_arg);
            orbitkit::OrbitOptions o;
            o.budget = budget;
            o.seed = seed;
            o.tmax = tmax;
            o.tol = orbit_tol;
            o.cell = cell;
            o.threads = nthreads;
            const auto x0 = parse_point(from, f.dimension, "--from");
            const auto cloud = attainable ? orbitkit::sample_attainable(f, x0, o) : orbitkit::sample_orbit(f, x0, o);
            std::ostringstream os;
            orbitkit::write_cloud_csv(os, cloud);
            emit(out_path, os.str());
            if (cloud.failures > 0) std::cerr << cloud.failures << " flows failed and were skipped\n";
            return 0;
        }

        if (*rank) {
            const auto f = load_family(family_arg);
            emit(out_path, std::to_string(orbitkit::rank_at(f, parse_point(at, f.dimension, "--at"), rank_tol)) + "\n");
            return 0;
        }

        if (*check) {
            const auto f = load_family(family_arg);
            json params = json::object();
            if (!params_file.empty()) params = parse_json(read_file(params_file), params_file);
            if (!params_text.empty()) params = parse_json(params_text, "--params");
            if (!params.is_object()) throw InputError("checker parameters must be a JSON object");
            if (!at.empty()) params["at"] = parse_point(at, f.dimension, "--at");
            orbitkit::RunOptions run;
            run.budget = budget;
            run.seed = seed;
            run.threads = nthreads;
            const auto v = orbitkit::run_condition(condition, f, params, run);
            emit(out_path, v.to_json().dump(2) + "\n");
            return exit_for(v.outcome);
        }

        if (*leafmap) {
            const auto f = load_family(family_arg);
            const auto b = parse_list(box, "--box");
            if (b.size() != 2 * f.dimension) throw InputError("--box needs lo,hi for each of the " + std::to_string(f.dimension) + " axes");
            orbitkit::Point lo, hi;
            for (std::size_t a = 0; a < f.dimension; ++a) {
                lo.push_back(b[2 * a]);
                hi.push_back(b[2 * a + 1]);
                if (!(lo.back() < hi.back())) throw InputError("--box needs lo < hi on every axis");
            }
            std::vector<int> r;
            for (double v : parse_list(res, "--res")) {
                if (v != std::floor(v) || v < 2) throw InputError("--res values must be integers >= 2");
                r.push_back(static_cast<int>(v));
            }
            if (r.size() == 1) r.assign(f.dimension, r.front());
            if (r.size() != f.dimension) throw InputError("--res needs one value or one per axis");
            orbitkit::LeafMapOptions o;
            o.budget = leaf_budget;
            o.tol = leaf_tol;
            o.seed = seed;
            o.threads = nthreads;
            std::ostringstream os;
            orbitkit::write_leafmap_csv(os, orbitkit::leaf_dim_map(f, lo, hi, r, o));
            emit(out_path, os.str());
            return 0;
        }

        if (*corpus) {
            std::vector<orbitkit::ExampleCase> cases;
            if (case_files.empty()) {
                cases = orbitkit::builtin_cases();
            } else {
                for (const auto& path : case_files) cases.push_back(orbitkit::case_from_json(parse_json(read_file(path), path)));
            }
            if (!dump_dir.empty()) {
                std::filesystem::create_directories(dump_dir);
                for (const auto& c : cases) {
                    std::ofstream(std::filesystem::path(dump_dir) / (c.name + ".json")) << orbitkit::case_to_json(c).dump(2) << '\n';
                }
                return 0;
            }
            if (!case_names.empty()) {
                std::vector<orbitkit::ExampleCase> chosen;
                for (const auto& name : case_names) {
                    const auto it = std::find_if(cases.begin(), cases.end(), [&](const auto& c) { return c.name == name; });
                    if (it == cases.end()) throw InputError("unknown case \"" + name + "\"");
                    chosen.push_back(*it);
                }
                cases = std::move(chosen);
            }
            orbitkit::RunOptions run;
            run.budget = corpus_budget;
            run.seed = seed;
            run.threads = nthreads;
            bool all = true;
            json reports = json::array();
            std::ostringstream os;
            for (const auto& c : cases) {
                const auto rep = orbitkit::run_case(c, run);
                all = all && rep.pass();
                if (as_json) {
                    reports.push_back(rep.to_json());
                    continue;
                }
                for (const auto& e : rep.entries) {
                    os << (e.pass ? "PASS " : "FAIL ") << c.name << "  " << e.kind << ": " << e.label << '\n';
                    if (!e.pass) os << "     " << e.detail.dump() << '\n';
                }
                os << (rep.pass() ? "ok   " : "MISMATCH ") << c.name << '\n';
                std::cerr << c.name << ": " << rep.seconds << " s\n";
            }
            emit(out_path, as_json ? reports.dump(2) + "\n" : os.str());
            return all ? 0 : kExitFail;
        }
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kExitInput;
    } catch (const orbitkit::DimensionMismatch& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kExitInput;
    } catch (const json::exception& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::invalid_argument& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kExitInput;
    } catch (const NumericFailure& e) {
        std::cerr << json{{"error", e.what()}, {"detail", e.detail}}.dump() << '\n';
        return kExitFail;
    } catch (const std::exception& e) {
        std::cerr << json{{"error", e.what()}}.dump() << '\n';
        return kExitFail;
    }
    return kExitInput;
}
