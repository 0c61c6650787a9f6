#include <csignal>
#include <iostream>
#include <pthread.h>
#include <thread>

#include <CLI11.hpp>

#include "gridlay/app.hpp"
#include "gridlay/builtin_tech.hpp"
#include "gridlay/error.hpp"
#include "gridlay/strings.hpp"

namespace {

using namespace gridlay;

void print_error(const Error& e) {
  std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
  if (!e.detail().empty()) std::cerr << "detail: " << e.detail().dump() << "\n";
}

int cmd_run(const RunOptions& options) {
  const RunReport report = run_script(options);
  for (const auto& w : report.warnings) std::cerr << (options.strict ? "error: " : "warning: ") << w << "\n";
  std::cout << to_json(report).dump(2) << "\n";
  return report.exit_code;
}

int cmd_check(const std::string& tech_path) {
  const Technology tech = load_tech_file(tech_path);
  std::cout << "tech " << tech.name << ": " << tech.layers.size() << " layers, " << tech.vias.size() << " vias, "
            << tech.templates.size() << " templates\n";
  return 0;
}

int cmd_render(const std::string& layout_path, const std::string& out_path, const std::string& tech_path,
               const std::vector<std::string>& hide) {
  const LayoutDb db = parse_layout_json(read_text_file(layout_path));
  Technology tech;
  if (!tech_path.empty()) {
    tech = load_tech_file(tech_path);
  } else if (auto text = builtin_tech_text(db.tech_name)) {
    tech = load_tech_text(*text);
  } else {
    throw Error(ErrorCode::IoError, "layout uses tech " + db.tech_name + "; pass --tech");
  }
  SvgOptions options;
  options.hide_layers.insert(hide.begin(), hide.end());
  write_text_file(out_path, to_svg(db, tech, options));
  return 0;
}

int cmd_shell(const std::string& tech_path, const std::string& netlist_path) {
  auto tech = std::make_shared<const Technology>(load_tech_file(tech_path));
  Session session(tech, load_top_netlist(read_text_file(netlist_path), *tech));
  std::cout << "design " << session.netlist().name << "; one command per line, EOF to quit\n";
  std::string line;
  while (std::cout << "> " << std::flush, std::getline(std::cin, line)) {
    const std::string_view body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    try {
      std::cout << session.execute(line).dump(2) << "\n";
    } catch (const Error& e) {
      print_error(e);
    }
  }
  std::cout << "\n";
  return 0;
}

int cmd_serve(const std::string& tech_path, int port, const std::string& host, const std::string& llm_path,
              const std::string& static_dir) {
  auto tech = std::make_shared<const Technology>(load_tech_file(tech_path));
  std::optional<LlmSetup> llm;
  if (!llm_path.empty()) llm = load_llm_config(llm_path);
  std::optional<std::filesystem::path> assets;
  if (!static_dir.empty()) assets = static_dir;

  // Signals are taken by a dedicated thread so shutdown runs outside a handler.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  SessionServer server(tech, std::move(llm), assets);
  const int bound = server.bind(host, port);
  std::cout << "listening on " << host << ":" << bound << std::endl;
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
  });
  server.listen();
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Grid-based layout generation from SPICE netlists and a command language"};
  app.require_subcommand(1);

  RunOptions run;
  bool no_strict = false;
  auto* run_cmd = app.add_subcommand("run", "Replay a script and write layout.json, layout.svg, report.json");
  run_cmd->add_option("--tech", run.tech_path, "Technology JSON")->required();
  run_cmd->add_option("--netlist", run.netlist_path, "SPICE netlist")->required();
  run_cmd->add_option("--script", run.script_path, "Command script")->required();
  run_cmd->add_option("--out", run.out_dir, "Output directory")->required();
  run_cmd->add_flag("--no-strict", no_strict, "Report DRC/LVS failures as warnings");

  std::string tech_path, llm_path, static_dir, host = "127.0.0.1";
  int port = 8080;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP session server");
  serve_cmd->add_option("--tech", tech_path, "Technology JSON")->required();
  serve_cmd->add_option("--port", port, "TCP port (0 picks a free one)");
  serve_cmd->add_option("--host", host, "Bind address");
  serve_cmd->add_option("--llm-config", llm_path, "LLM bridge config JSON");
  serve_cmd->add_option("--static", static_dir, "Directory served at /");

  std::string check_tech;
  auto* check_cmd = app.add_subcommand("check", "Validate a technology file");
  check_cmd->add_option("--tech", check_tech, "Technology JSON")->required();

  std::string layout_path, svg_path, render_tech;
  std::vector<std::string> hide;
  auto* render_cmd = app.add_subcommand("render", "Render a layout JSON to SVG");
  render_cmd->add_option("--layout", layout_path, "Layout JSON")->required();
  render_cmd->add_option("--out", svg_path, "SVG output")->required();
  render_cmd->add_option("--tech", render_tech, "Technology JSON (built-in techs need none)");
  render_cmd->add_option("--hide-layer", hide, "Layer to leave out");

  std::string shell_tech, shell_netlist;
  auto* shell_cmd = app.add_subcommand("shell", "Interactive session on stdin");
  shell_cmd->add_option("--tech", shell_tech, "Technology JSON")->required();
  shell_cmd->add_option("--netlist", shell_netlist, "SPICE netlist")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      run.strict = !no_strict;
      return cmd_run(run);
    }
    if (*serve_cmd) return cmd_serve(tech_path, port, host, llm_path, static_dir);
    if (*check_cmd) return cmd_check(check_tech);
    if (*render_cmd) return cmd_render(layout_path, svg_path, render_tech, hide);
    if (*shell_cmd) return cmd_shell(shell_tech, shell_netlist);
  } catch (const Error& e) {
    print_error(e);
    return e.code() == ErrorCode::IoError ? 3 : 2;
  }
  return 0;
}
