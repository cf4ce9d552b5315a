#include <CLI11.hpp>
#include <cstdint>
#include <iostream>

#include "kdpp/harness.hpp"

// Exit codes: 0 = success / all checks pass, 1 = verification or sampling
// failure, 2 = configuration or capacity error.

int main(int argc, char** argv) {
  CLI::App app{"Gibbs sampling for discrete and continuous k-DPPs"};
  app.require_subcommand(1);

  kdpp::SphereJob sphere;
  auto* sub_sphere = app.add_subcommand("sample-sphere", "Sample a Gaussian k-DPP on S^{d-1}");
  sub_sphere->add_option("--d", sphere.d, "ambient dimension")->required();
  sub_sphere->add_option("--k", sphere.k, "number of points")->required();
  sub_sphere->add_option("--sigma", sphere.sigma, "Gaussian bandwidth")->required();
  sub_sphere->add_option("--steps", sphere.steps, "Gibbs steps after burn-in")->required();
  sub_sphere->add_option("--burnin", sphere.burnin, "unrecorded Gibbs steps");
  sub_sphere->add_option("--thin", sphere.thin, "record every thin-th state");
  sub_sphere->add_option("--seed", sphere.seed, "master seed")->required();
  sub_sphere->add_option("--out", sphere.out, "output path")->required();
  sub_sphere->add_option("--format", sphere.format, "lines|json")
      ->check(CLI::IsMember({"lines", "json"}));

  kdpp::DiscreteJob discrete;
  auto* sub_discrete = app.add_subcommand("sample-discrete", "Sample a discrete k-DPP");
  sub_discrete->add_option("--kernel", discrete.kernel_path, "kernel matrix file")->required();
  sub_discrete->add_option("--k", discrete.k, "number of points")->required();
  sub_discrete->add_option("--steps", discrete.steps, "Gibbs steps after burn-in")->required();
  sub_discrete->add_option("--burnin", discrete.burnin, "unrecorded Gibbs steps");
  sub_discrete->add_option("--thin", discrete.thin, "record every thin-th state");
  sub_discrete->add_option("--seed", discrete.seed, "master seed")->required();
  sub_discrete->add_option("--out", discrete.out, "output path")->required();

  int eig_d = 3, eig_ell_max = -1;
  double eig_sigma = 1.0;
  std::string eig_out;
  auto* sub_eigens = app.add_subcommand("eigens", "Dump the spherical Gaussian eigenvalue ladder");
  sub_eigens->add_option("--d", eig_d, "ambient dimension")->required();
  sub_eigens->add_option("--sigma", eig_sigma, "Gaussian bandwidth")->required();
  sub_eigens->add_option("--ell-max", eig_ell_max, "highest degree (default: auto by trace convergence)");
  sub_eigens->add_option("--out", eig_out, "output CSV path")->required();

  std::string verify_suite, verify_out;
  kdpp::VerifySizes verify_sizes;
  std::uint64_t verify_seed = 0;
  auto* sub_verify = app.add_subcommand("verify", "Run a verification suite");
  sub_verify->add_option("--suite", verify_suite,
                         "discrete-stationarity|conductance|cheeger|warmstart-bound|eigens-trace")
      ->required();
  sub_verify->add_option("--instances", verify_sizes.instances, "number of random instances");
  sub_verify->add_option("--max-n", verify_sizes.max_n, "largest ground set size");
  sub_verify->add_option("--max-k", verify_sizes.max_k, "largest k");
  sub_verify->add_option("--seed", verify_seed, "master seed")->required();
  sub_verify->add_option("--out", verify_out, "report JSON path");

  std::string analyze_kernel, analyze_out;
  int analyze_k = 1;
  auto* sub_analyze = app.add_subcommand("analyze", "Full chain report for an enumerable instance");
  sub_analyze->add_option("--kernel", analyze_kernel, "kernel matrix file")->required();
  sub_analyze->add_option("--k", analyze_k, "number of points")->required();
  sub_analyze->add_option("--out", analyze_out, "report JSON path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (sub_sphere->parsed()) {
      std::cout << kdpp::run_sample_sphere(sphere).dump(2) << "\n";
    } else if (sub_discrete->parsed()) {
      std::cout << kdpp::run_sample_discrete(discrete).dump(2) << "\n";
    } else if (sub_eigens->parsed()) {
      kdpp::run_eigens(eig_d, eig_sigma, eig_ell_max, eig_out);
    } else if (sub_verify->parsed()) {
      const kdpp::VerifyReport rep = kdpp::run_verify_suite(verify_suite, verify_sizes, verify_seed);
      const kdpp::json doc = kdpp::verify_report_to_json(rep);
      if (!verify_out.empty()) {
        std::ofstream f(verify_out);
        if (!f) throw std::invalid_argument("cannot open output file: " + verify_out);
        f << doc.dump(2) << "\n";
      }
      std::cout << doc.dump(2) << "\n";
      return rep.all_pass ? 0 : 1;
    } else if (sub_analyze->parsed()) {
      kdpp::run_analyze(analyze_kernel, analyze_k, analyze_out);
    }
  } catch (const kdpp::capacity_error& e) {
    std::cerr << "capacity error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
