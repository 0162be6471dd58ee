#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "cli.hpp"

namespace fs = std::filesystem;
using namespace paddist;
using cli::json;

namespace {

// Explicit flag values, kept as JSON so they can be laid over a configuration file.
struct FlagSet {
  std::map<std::string, CLI::Option*> opts;
  std::map<std::string, std::string> text;
  std::map<std::string, int> ints;
  std::map<std::string, long long> longs;
  std::vector<long long> primes;
  bool parabolic = true;
  std::string config;

  json explicit_values() const {
    json j = json::object();
    for (auto& [k, o] : opts) {
      if (o->count() == 0) continue;
      if (text.count(k))
        j[k] = text.at(k);
      else if (ints.count(k))
        j[k] = ints.at(k);
      else if (longs.count(k))
        j[k] = longs.at(k);
      else if (k == "hecke-primes")
        j[k] = primes;
      else if (k == "parabolic")
        j[k] = parabolic;
    }
    return j;
  }
};

void add_common(CLI::App* sub, FlagSet& f) {
  sub->set_help_flag("--help", "print this help");
  auto add_text = [&](const std::string& name, const std::string& help) {
    f.text[name];
    f.opts[name] = sub->add_option("--" + name, f.text[name], help);
  };
  auto add_int = [&](const std::string& name, const std::string& help) {
    f.ints[name];
    f.opts[name] = sub->add_option("--" + name, f.ints[name], help);
  };
  auto add_long = [&](const std::string& name, const std::string& help) {
    f.longs[name];
    f.opts[name] = sub->add_option("--" + name, f.longs[name], help);
  };
  add_long("p", "prime p (odd)");
  add_int("g", "genus 1 or 2");
  add_int("cap-p", "p-adic precision cap");
  add_int("cap-w", "w-adic precision cap of the weight disk (0: no disk)");
  add_int("trunc", "moment truncation M");
  add_text("weight", "weight descriptor: k=<a>[,<b>] or disk:k=<a>");
  add_long("level", "tame level N");
  add_text("h", "slope bound (integer or a/b)");
  add_text("source", "operator source: file or modsym");
  add_text("series", "comma-separated series coefficients c_0,c_1,...");
  add_text("series-file", "JSON file holding series coefficients");
  add_text("operator-file", "JSON file holding an operator matrix");
  add_text("bundle", "JSON bundle {algebra, module_action, gram}");
  add_text("coefficients", "algebraic, distributions or trivial");
  add_text("output", "report path; matrices go to CSV files next to it");
  f.opts["hecke-primes"] = sub->add_option("--hecke-primes", f.primes, "primes q for T_q")->delimiter(',');
  f.opts["parabolic"] = sub->add_option("--parabolic", f.parabolic, "work in the parabolic quotient (true/false)");
  sub->add_option("--config", f.config, "JSON configuration; explicit flags take precedence");
}

void write_atomically(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw cli::ValidationError("cannot write '" + path.string() + "'");
    out << content;
  }
  fs::rename(tmp, path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"p-adic distributions, pairings, slope decompositions and ramification of eigenalgebras"};
  app.set_help_flag("--help", "print this help");
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));
  const std::vector<std::pair<std::string, std::string>> commands{
      {"pair-gram", "Gram matrix of the distribution pairing"},
      {"newton", "Newton polygon and slope factorization of a Fredholm series"},
      {"slope-split", "slope decomposition of an operator"},
      {"modsym", "modular symbols, Hecke operators and the cup pairing"},
      {"ramify", "eigenalgebra, L-ideal and ramification verdicts"},
      {"control-check", "dimension comparison of overconvergent and classical slope parts"}};
  std::map<std::string, FlagSet> flags;
  for (auto& [name, help] : commands) add_common(app.add_subcommand(name, help), flags[name]);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  CLI::App* sub = app.get_subcommands().front();
  const std::string cmd = sub->get_name();
  FlagSet& f = flags[cmd];
  try {
    json merged = f.config.empty() ? json::object() : cli::load_json_file(f.config);
    if (!merged.is_object()) throw cli::ValidationError("configuration file must hold a JSON object");
    merged.update(f.explicit_values());
    cli::RunConfig cfg = cli::resolve_config(cmd, merged);
    cli::Report rep = cli::run_command(cfg);

    std::vector<std::string> sidecars;
    std::vector<std::pair<fs::path, std::string>> files;
    if (!cfg.output.empty()) {
      fs::path out(cfg.output);
      for (auto& [name, M] : rep.matrices) {
        fs::path side = out;
        side.replace_extension("");
        side += "." + name + ".csv";
        sidecars.push_back(side.filename().string());
        files.emplace_back(side, cli::matrix_csv(M));
      }
    }
    std::string doc = cli::report_document(cfg, rep, sidecars).dump(2) + "\n";
    if (cfg.output.empty()) {
      std::cout << doc;
    } else {
      for (auto& [path, content] : files) write_atomically(path, content);
      write_atomically(cfg.output, doc);
    }
    return 0;
  } catch (const cli::ValidationError& e) {
    std::cerr << "error: ValidationError: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
