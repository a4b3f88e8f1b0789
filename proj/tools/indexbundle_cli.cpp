// Command-line front end: mesh generation, bundle/morphism persistence,
// index-class computation, parametrix construction, the boundary-value-problem
// demos and the axiom suite runner.
//
// Exit codes: 0 all checks pass, 1 a mathematical check failed, 2 bad input.

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "indexbundle/indexbundle.hpp"

using namespace indexbundle;

namespace {

std::uint64_t default_seed() {
  if (const char* env = std::getenv("INDEXBUNDLE_SEED")) {
    return std::strtoull(env, nullptr, 10);
  }
  return 42;
}

void emit(const Json& payload, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << canonical_dump(payload);
  } else {
    write_json_file(out_path, payload);
    std::cout << "wrote " << out_path << "\n";
  }
}

MeshPtr load_mesh_file(const std::string& path) {
  return share(mesh_from_json(load_json_file(path), path));
}

struct CommonOptions {
  std::uint64_t seed = default_seed();
  int threads = 1;
  double rank_scale = 32.0;
  double tau_idem = 1e-8;
  double delta_edge = 0.5;
  double sigma_floor = 1e-6;

  ToleranceConfig config() const {
    ToleranceConfig cfg;
    cfg.seed = seed;
    cfg.threads = threads;
    cfg.rank_scale = rank_scale;
    cfg.tau_idem = tau_idem;
    cfg.delta_edge = delta_edge;
    cfg.sigma_floor = sigma_floor;
    cfg.validate();
    return cfg;
  }

  void attach(CLI::App* app) {
    app->add_option("--seed", seed,
                    "random seed (INDEXBUNDLE_SEED overrides the default)");
    app->add_option("--threads", threads, "per-vertex parallelism");
    app->add_option("--rank-scale", rank_scale, "singular value cutoff scale");
    app->add_option("--tau-idem", tau_idem, "idempotency tolerance");
    app->add_option("--delta-edge", delta_edge, "edge continuity margin in (0,1)");
    app->add_option("--sigma-floor", sigma_floor, "invertibility threshold");
  }
};

int run(int argc, char** argv) {
  CLI::App app{"index bundles of Fredholm morphisms on finite meshes"};
  app.require_subcommand(1);
  CommonOptions common;

  // ---- mesh -----------------------------------------------------------------
  auto* mesh_cmd = app.add_subcommand("mesh", "generate base meshes and maps");
  mesh_cmd->require_subcommand(1);

  auto* mesh_make = mesh_cmd->add_subcommand("make", "generate a base mesh");
  std::string mesh_kind;
  int mesh_m = 64;
  int mesh_level = 1;
  int mesh_t_steps = 8;
  std::string mesh_base_path;
  std::string mesh_out;
  mesh_make->add_option("--kind", mesh_kind, "circle | interval | sphere | product")
      ->required();
  mesh_make->add_option("--m", mesh_m, "vertex count (circle, interval)");
  mesh_make->add_option("--level", mesh_level, "subdivision level (sphere)");
  mesh_make->add_option("--t-steps", mesh_t_steps, "time steps (product)");
  mesh_make->add_option("--base", mesh_base_path, "base mesh file (product)");
  mesh_make->add_option("--out", mesh_out, "output file");
  mesh_make->callback([&]() {
    BaseMesh mesh;
    if (mesh_kind == "circle") {
      mesh = circle_mesh(mesh_m);
    } else if (mesh_kind == "interval") {
      mesh = interval_mesh(mesh_m);
    } else if (mesh_kind == "sphere") {
      mesh = sphere_mesh(mesh_level);
    } else if (mesh_kind == "product") {
      const MeshPtr base = mesh_base_path.empty()
                               ? share(circle_mesh(mesh_m))
                               : load_mesh_file(mesh_base_path);
      mesh = product_with_interval(base, mesh_t_steps);
    } else {
      throw Error(ErrorCode::invalid_mesh, "unknown kind '" + mesh_kind + "'");
    }
    emit(mesh_to_json(mesh), mesh_out);
  });

  auto* mesh_power = mesh_cmd->add_subcommand(
      "power-map", "degree-d self cover of the circle (for pullbacks)");
  int power_m = 8;
  int power_d = 2;
  std::string power_out;
  mesh_power->add_option("--m", power_m, "target circle size")->required();
  mesh_power->add_option("--d", power_d, "degree")->required();
  mesh_power->add_option("--out", power_out, "output file");
  mesh_power->callback([&]() {
    emit(mesh_map_to_json(circle_power_map(power_m, power_d)), power_out);
  });

  // ---- bundle ---------------------------------------------------------------
  auto* bundle_cmd = app.add_subcommand("bundle", "projection-field operations");
  bundle_cmd->require_subcommand(1);

  auto* bundle_validate =
      bundle_cmd->add_subcommand("validate", "check bundle invariants");
  std::string bv_mesh, bv_bundle, bv_out;
  bundle_validate->add_option("--mesh", bv_mesh)->required();
  bundle_validate->add_option("--bundle", bv_bundle)->required();
  bundle_validate->add_option("--out", bv_out);
  bundle_validate->callback([&]() {
    const auto cfg = common.config();
    const auto mesh = load_mesh_file(bv_mesh);
    const auto any = bundle_from_json(load_json_file(bv_bundle), mesh, bv_bundle);
    const auto report = std::visit(
        [&](const auto& field) { return validate_bundle(field, cfg); }, any);
    emit(validation_to_json(report), bv_out);
    if (!report.pass) throw Error(ErrorCode::not_a_bundle, report.summary());
  });

  auto* bundle_complement = bundle_cmd->add_subcommand(
      "complement", "orthogonal complement inside a bundle or the ambient");
  std::string bc_mesh, bc_bundle, bc_within, bc_out;
  bundle_complement->add_option("--mesh", bc_mesh)->required();
  bundle_complement->add_option("--bundle", bc_bundle)->required();
  bundle_complement->add_option("--within", bc_within,
                                "containing bundle (default: the ambient)");
  bundle_complement->add_option("--out", bc_out);
  bundle_complement->callback([&]() {
    const auto cfg = common.config();
    const auto mesh = load_mesh_file(bc_mesh);
    const auto any = bundle_from_json(load_json_file(bc_bundle), mesh, bc_bundle);
    std::visit(
        [&](const auto& field) {
          using Field = std::decay_t<decltype(field)>;
          std::optional<Field> within;
          if (!bc_within.empty()) {
            within = std::get<Field>(
                bundle_from_json(load_json_file(bc_within), mesh, bc_within));
          }
          emit(bundle_to_json(complement(field, within, cfg)), bc_out);
        },
        any);
  });

  auto* bundle_pullback =
      bundle_cmd->add_subcommand("pullback", "pull a bundle back along a mesh map");
  std::string bp_map, bp_bundle, bp_out;
  bundle_pullback->add_option("--map", bp_map)->required();
  bundle_pullback->add_option("--bundle", bp_bundle)->required();
  bundle_pullback->add_option("--out", bp_out);
  bundle_pullback->callback([&]() {
    const auto map = mesh_map_from_json(load_json_file(bp_map), ".", bp_map);
    const auto any =
        bundle_from_json(load_json_file(bp_bundle), map.target, bp_bundle);
    std::visit(
        [&](const auto& field) {
          emit(bundle_to_json(pullback_bundle(map, field)), bp_out);
        },
        any);
  });

  // ---- morphism ---------------------------------------------------------------
  auto* morphism_cmd = app.add_subcommand("morphism", "Fredholm morphism operations");
  morphism_cmd->require_subcommand(1);

  auto* morphism_make =
      morphism_cmd->add_subcommand("make", "assemble and validate a morphism");
  std::string mm_mesh, mm_domain, mm_target, mm_mats, mm_out;
  morphism_make->add_option("--mesh", mm_mesh)->required();
  morphism_make->add_option("--domain", mm_domain, "domain bundle file")->required();
  morphism_make->add_option("--target", mm_target, "target bundle file")->required();
  morphism_make->add_option("--mats", mm_mats, "per-vertex matrices file")->required();
  morphism_make->add_option("--out", mm_out);
  morphism_make->callback([&]() {
    const auto cfg = common.config();
    Json j;
    j["mesh"] = mesh_to_json(*load_mesh_file(mm_mesh));
    j["domain"] = load_json_file(mm_domain);
    j["target"] = load_json_file(mm_target);
    j["mats"] = load_json_file(mm_mats);
    const auto any = morphism_from_json(j, ".", "morphism", cfg);
    std::visit(
        [&](const auto& morphism) {
          emit(morphism_to_json(morphism, *morphism.domain.base), mm_out);
        },
        any);
  });

  auto* morphism_compose = morphism_cmd->add_subcommand("compose", "outer after inner");
  std::string mc_outer, mc_inner, mc_out;
  morphism_compose->add_option("--outer", mc_outer)->required();
  morphism_compose->add_option("--inner", mc_inner)->required();
  morphism_compose->add_option("--out", mc_out);
  morphism_compose->callback([&]() {
    const auto cfg = common.config();
    const auto outer = load_morphism_file(mc_outer, cfg);
    const auto inner = load_morphism_file(mc_inner, cfg);
    if (outer.index() != inner.index()) {
      throw Error(ErrorCode::invalid_morphism, "scalar kinds differ");
    }
    std::visit(
        [&](const auto& outer_morphism) {
          using Morphism = std::decay_t<decltype(outer_morphism)>;
          const auto& inner_morphism = std::get<Morphism>(inner);
          const auto composite = compose(outer_morphism, inner_morphism, cfg);
          emit(morphism_to_json(composite, *composite.domain.base), mc_out);
        },
        outer);
  });

  auto* morphism_perturb = morphism_cmd->add_subcommand(
      "perturb", "add a random finite-rank compact perturbation");
  std::string mp_morphism, mp_out;
  int mp_rank = 1;
  double mp_magnitude = 0.1;
  morphism_perturb->add_option("--morphism", mp_morphism)->required();
  morphism_perturb->add_option("--rank-bound", mp_rank);
  morphism_perturb->add_option("--magnitude", mp_magnitude);
  morphism_perturb->add_option("--out", mp_out);
  morphism_perturb->callback([&]() {
    const auto cfg = common.config();
    const auto any = load_morphism_file(mp_morphism, cfg);
    std::visit(
        [&](const auto& morphism) {
          const auto perturbation = random_compact_perturbation(
              morphism, mp_rank, mp_magnitude, cfg.seed, cfg);
          const auto perturbed = add(morphism, perturbation, cfg);
          emit(morphism_to_json(perturbed, *perturbed.domain.base), mp_out);
        },
        any);
  });

  // ---- index ------------------------------------------------------------------
  auto* index_cmd = app.add_subcommand("index", "index bundle computations");
  index_cmd->require_subcommand(1);

  auto* index_compute =
      index_cmd->add_subcommand("compute", "index class of a morphism");
  std::string ic_morphism, ic_out;
  index_compute->add_option("--morphism", ic_morphism)->required();
  index_compute->add_option("--out", ic_out);
  index_compute->callback([&]() {
    const auto cfg = common.config();
    const auto any = load_morphism_file(ic_morphism, cfg);
    std::visit(
        [&](const auto& morphism) {
          using Scalar = typename std::decay_t<decltype(morphism)>::ScalarType;
          const auto transversal = transversal_subbundle(morphism, cfg);
          VirtualBundle<Scalar> virtual_bundle;
          virtual_bundle.plus = kernel_bundle(morphism, transversal.field, cfg);
          virtual_bundle.minus = transversal.field;
          virtual_bundle.reduced =
              reduce_virtual(virtual_bundle.plus, virtual_bundle.minus, cfg);
          emit(class_to_json(virtual_bundle, transversal.dim(),
                             transversal.min_margin),
               ic_out);
        },
        any);
  });

  auto* index_welldef =
      index_cmd->add_subcommand("welldef", "compare two transversal constructions");
  std::string iw_morphism, iw_out;
  std::vector<std::uint64_t> iw_seeds{1, 2};
  index_welldef->add_option("--morphism", iw_morphism)->required();
  index_welldef->add_option("--seeds", iw_seeds, "two construction seeds")->expected(2);
  index_welldef->add_option("--out", iw_out);
  index_welldef->callback([&]() {
    const auto cfg = common.config();
    const auto any = load_morphism_file(iw_morphism, cfg);
    std::visit(
        [&](const auto& morphism) {
          const auto report =
              well_definedness_check(morphism, iw_seeds[0], iw_seeds[1], cfg);
          emit(welldef_to_json(report), iw_out);
        },
        any);
  });

  // ---- parametrix ---------------------------------------------------------------
  auto* parametrix_cmd = app.add_subcommand("parametrix", "finite-rank stabilization");
  parametrix_cmd->require_subcommand(1);
  auto* parametrix_build = parametrix_cmd->add_subcommand(
      "build", "construct K with L + K invertible, or report the obstruction");
  std::string pb_morphism, pb_out;
  parametrix_build->add_option("--morphism", pb_morphism)->required();
  parametrix_build->add_option("--out", pb_out);
  parametrix_build->callback([&]() {
    const auto cfg = common.config();
    const auto any = load_morphism_file(pb_morphism, cfg);
    std::visit(
        [&](const auto& morphism) {
          const auto result = build_parametrix(morphism, cfg);
          emit(parametrix_to_json(result), pb_out);
        },
        any);
  });

  // ---- bvp ----------------------------------------------------------------
  auto* bvp_cmd = app.add_subcommand("bvp", "boundary value problem application");
  bvp_cmd->require_subcommand(1);
  auto* bvp_demo = bvp_cmd->add_subcommand(
      "demo", "discretize u' = f with (u(0),u(1)) constrained to a boundary bundle");
  std::string bd_bundle;
  int bd_m = 64;
  int bd_grid = 32;
  int bd_level = 1;
  std::string bd_out;
  bvp_demo->add_option("--bundle", bd_bundle, "moebius | trivial | bott")->required();
  bvp_demo->add_option("--m", bd_m, "circle size (moebius, trivial)");
  bvp_demo->add_option("--grid", bd_grid, "time samples");
  bvp_demo->add_option("--level", bd_level, "sphere subdivision (bott)");
  bvp_demo->add_option("--out", bd_out);
  bvp_demo->callback([&]() {
    const auto cfg = common.config();
    Json payload;
    if (bd_bundle == "moebius" || bd_bundle == "trivial") {
      const auto mesh = share(circle_mesh(bd_m));
      BvpSpec<double> spec;
      if (bd_bundle == "moebius") {
        spec.boundary_bundle = moebius_bundle(mesh);
      } else {
        Eigen::Vector2d dir(1.0, 0.0);
        spec.boundary_bundle =
            constant_field<double>(mesh, Mat<double>(dir * dir.transpose()));
      }
      spec.n = 1;
      spec.grid = bd_grid;
      payload = bvp_report_to_json(bvp_check(spec, cfg));
    } else if (bd_bundle == "bott") {
      const auto sphere = share(sphere_mesh(bd_level));
      BvpSpec<cxd> spec;
      spec.boundary_bundle = bott_bundle(sphere);
      spec.n = 1;
      spec.grid = bd_grid;
      payload = bvp_report_to_json(bvp_check(spec, cfg));
    } else {
      throw Error(ErrorCode::invalid_spec, "unknown demo bundle '" + bd_bundle + "'");
    }
    payload["bundle"] = bd_bundle;
    payload["grid"] = bd_grid;
    emit(payload, bd_out);
  });

  // ---- axioms ---------------------------------------------------------------
  auto* axioms_cmd = app.add_subcommand("axioms", "executable property suite");
  axioms_cmd->require_subcommand(1);
  auto* axioms_verify = axioms_cmd->add_subcommand(
      "verify", "run every axiom-level property over randomized families");
  int av_trials = 25;
  bool av_inject = false;
  std::string av_out;
  axioms_verify->add_option("--trials", av_trials, "trials per property");
  axioms_verify->add_flag("--inject-break", av_inject,
                          "deliberately fail one comparison (harness self-test)");
  axioms_verify->add_option("--out", av_out);
  axioms_verify->callback([&]() {
    const auto cfg = common.config();
    const auto report = run_axiom_suite(cfg.seed, av_trials, cfg, av_inject);
    emit(run_report_to_json(report, cfg), av_out);
    for (const auto& check : report.checks) {
      std::cout << (check.pass() ? "PASS" : "FAIL") << "  " << check.name << " ("
                << check.trials << " trials)"
                << (check.detail.empty() ? "" : "  " + check.detail) << "\n";
    }
    if (!report.pass()) {
      throw Error(ErrorCode::well_definedness_violation,
                  "axiom suite failed; counterexample payload above");
    }
  });

  for (auto* leaf :
       {mesh_make, mesh_power, bundle_validate, bundle_complement, bundle_pullback,
        morphism_make, morphism_compose, morphism_perturb, index_compute,
        index_welldef, parametrix_build, bvp_demo, axioms_verify}) {
    common.attach(leaf);
  }

  CLI11_PARSE(app, argc, argv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return is_input_error(e.code()) ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
