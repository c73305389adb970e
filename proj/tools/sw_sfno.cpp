#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "swsfno/cli.hpp"

namespace cli = swsfno::cli;

namespace {

void add_model_options(CLI::App* app, cli::ModelArgs& m) {
  app->add_option("--layers", m.layers, "SFNO blocks")->capture_default_str();
  app->add_option("--channels", m.channels, "hidden width")->capture_default_str();
  app->add_option("--lmax", m.l_max, "spectral degree cap (default n_lat - 1)");
  app->add_option("--mmax", m.m_max, "spectral order cap (default n_lon / 2)");
  app->add_option("--mlp-ratio", m.mlp_ratio)->capture_default_str();
  app->add_option("--activation", m.activation)
      ->check(CLI::IsMember({"gelu", "relu"}))
      ->capture_default_str();
  app->add_option("--spectral", m.spectral, "spectral weight layout")
      ->check(CLI::IsMember({"real", "complex"}))
      ->capture_default_str();
  app->add_flag("--no-embedding", m.no_embedding, "drop the positional channels");
  app->add_option("--seed", m.seed)->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Solar-wind surrogate toolkit: synthetic data, HUX, SFNO training and evaluation"};
  app.require_subcommand(1);
  std::string log_path;
  app.add_option("--log", log_path, "append the resolved configuration to this file");

  cli::SynthArgs synth;
  auto* s = app.add_subcommand("synth", "generate a synthetic dataset with a manifest");
  s->add_option("--seed", synth.seed)->capture_default_str();
  s->add_option("--count", synth.count)->capture_default_str();
  s->add_option("--test-count", synth.test_count, "cubes placed in the test split")
      ->capture_default_str();
  s->add_option("--nr", synth.n_r)->capture_default_str();
  s->add_option("--rmax", synth.r_max, "outer radius (solar radii)")->capture_default_str();
  s->add_option("--nlat", synth.n_lat)->capture_default_str();
  s->add_option("--nlon", synth.n_lon)->capture_default_str();
  s->add_option("--lband", synth.l_band, "boundary band limit")->capture_default_str();
  s->add_flag("!--no-warp", synth.warp, "plain HUX-f truth without acceleration or shear");
  s->add_option("--out", synth.out, "output directory")->capture_default_str();

  cli::HuxArgs hux;
  auto* h = app.add_subcommand("hux", "run HUX-f or HUX-b");
  h->add_option("--in", hux.in, "input cube (HWC1)")->required();
  h->add_option("--mode", hux.mode)->check(CLI::IsMember({"f", "b"}))->capture_default_str();
  h->add_option("--alpha", hux.alpha)->capture_default_str();
  h->add_flag("--no-acceleration", hux.no_acceleration);
  h->add_option("--nr", hux.n_r, "shells when the input is a single slice")->capture_default_str();
  h->add_option("--rmax", hux.r_max)->capture_default_str();
  h->add_option("--out", hux.out)->capture_default_str();

  cli::TrainArgs tr;
  auto* t = app.add_subcommand("train", "train an SFNO on the manifest's training split");
  t->add_option("--manifest", tr.manifest)->required();
  add_model_options(t, tr.model);
  t->add_option("--epochs", tr.epochs)->capture_default_str();
  t->add_option("--batch", tr.batch)->capture_default_str();
  t->add_option("--lr", tr.lr)->capture_default_str();
  t->add_option("--val-fraction", tr.val_fraction, "held-out fraction (default 0.1)");
  t->add_option("--out", tr.out, "checkpoint path")->capture_default_str();
  t->add_option("--curve", tr.curve, "loss-curve CSV (default <out>.curve.csv)");
  t->add_flag("--quiet", tr.quiet);

  cli::CvArgs cv;
  auto* c = app.add_subcommand("cv", "k-fold cross-validation over layers x channels");
  c->add_option("--manifest", cv.manifest)->required();
  add_model_options(c, cv.model);
  c->remove_option(c->get_option("--layers"));
  c->remove_option(c->get_option("--channels"));
  c->add_option("--layers", cv.layers, "candidate depths")->delimiter(',')->capture_default_str();
  c->add_option("--channels", cv.channels, "candidate widths")->delimiter(',')->capture_default_str();
  c->add_option("--folds", cv.folds)->capture_default_str();
  c->add_option("--epochs", cv.epochs)->capture_default_str();
  c->add_option("--batch", cv.batch)->capture_default_str();
  c->add_option("--lr", cv.lr)->capture_default_str();
  c->add_option("--out", cv.out, "CSV path")->capture_default_str();

  cli::EvalArgs ev;
  auto* e = app.add_subcommand("eval", "score SFNO and HUX-f against the truth");
  e->add_option("--ckpt", ev.ckpt, "checkpoint (not needed with --oracle)");
  e->add_option("--manifest", ev.manifest)->required();
  e->add_option("--split", ev.split)->check(CLI::IsMember({"train", "test"}))->capture_default_str();
  e->add_option("--report", ev.report, "JSON report path")->capture_default_str();
  e->add_option("--per-radius-csv", ev.per_radius_csv);
  e->add_option("--histogram-csv", ev.histogram_csv);
  e->add_flag("--oracle", ev.oracle, "use the truth as the SFNO prediction");
  e->add_option("--edge-percentile", ev.edge_percentile)->capture_default_str();
  e->add_option("--bins", ev.bins)->capture_default_str();
  e->add_option("--hux-alpha", ev.hux_alpha)->capture_default_str();

  cli::BenchArgs be;
  auto* b = app.add_subcommand("bench", "time and memory of SFNO vs HUX-f inference");
  b->add_option("--ckpt", be.ckpt)->required();
  b->add_option("--boundary", be.boundary, "cube whose slice 0 is the boundary")->required();
  b->add_option("--repeat", be.repeat)->capture_default_str();
  b->add_option("--out", be.out, "JSON path");

  cli::RenderArgs re;
  auto* r = app.add_subcommand("render", "write one shell as PGM or PPM");
  r->add_option("--cube", re.cube)->required();
  r->add_option("--radius-index", re.radius_index)->capture_default_str();
  r->add_option("--out", re.out)->capture_default_str();
  r->add_option("--format", re.format)->check(CLI::IsMember({"pgm", "ppm"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (s->parsed()) {
      cli::echo_config("synth", cli::to_json(synth), log_path);
      const auto m = cli::cmd_synth(synth);
      std::cout << "wrote " << m.size() << " cubes to " << synth.out << "\n";
    } else if (h->parsed()) {
      cli::echo_config("hux", cli::to_json(hux), log_path);
      cli::cmd_hux(hux);
      std::cout << "wrote " << hux.out << "\n";
    } else if (t->parsed()) {
      cli::echo_config("train", cli::to_json(tr), log_path);
      const auto ck = cli::cmd_train(tr);
      std::cout << "best epoch " << ck.best_epoch << "; wrote " << tr.out << "\n";
    } else if (c->parsed()) {
      cli::echo_config("cv", cli::to_json(cv), log_path);
      for (const auto& row : cli::cmd_cv(cv))
        std::cout << row.n_layers << " x " << row.hidden << ": mean MSE " << row.mean() << "\n";
    } else if (e->parsed()) {
      cli::echo_config("eval", cli::to_json(ev), log_path);
      const auto rep = cli::cmd_eval(ev);
      std::cout << rep["models"].dump(2) << "\n";
    } else if (b->parsed()) {
      cli::echo_config("bench", cli::to_json(be), log_path);
      std::cout << cli::cmd_bench(be).dump(2) << "\n";
    } else if (r->parsed()) {
      cli::echo_config("render", cli::to_json(re), log_path);
      cli::cmd_render(re);
      std::cout << "wrote " << re.out << "\n";
    }
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 0;
}
