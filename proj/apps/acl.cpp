#include "commands.hpp"

#include <acl/errors.hpp>
#include <acl/parallel.hpp>

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>

using namespace acl;
using nlohmann::json;

namespace
{

int usage(CLI::App const& app, std::string const& why)
{
  if(!why.empty())
    std::cerr << "error: " << why << "\n\n";
  std::cerr << app.help();
  return 2;
}

}

int main(int argc, char** argv)
{
  CLI::App app{"Dilated averages over polynomial curves: experiments and checks"};
  app.set_version_flag("--version", cli::kVersion);
  std::string configPath, runsDir = "runs";
  int threads = 0;
  long long seed = -1;
  app.add_option("--config", configPath, "JSON config; flags override its entries");
  app.add_option("--threads", threads, "worker threads (default ACL_THREADS, else 1)");
  app.add_option("--seed", seed, "master seed (default 7)");
  app.add_option("--runs-dir", runsDir, "root of runs/<id>/");
  app.require_subcommand(0, 1);

  std::map<std::string, std::map<std::string, std::string>> given;
  for(auto const& c : cli::commands())
  {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    for(auto const& o : c.opts)
    {
      std::string def = o.def.is_null() ? "" : (o.def.is_string() ? o.def.get<std::string>() : o.def.dump());
      auto* opt = sub->add_option("--" + o.name, given[c.name][o.name], o.help);
      if(!def.empty())
        opt->default_str(def);
    }
  }

  try
  {
    app.parse(argc, argv);
  }
  catch(CLI::ParseError const& e)
  {
    return app.exit(e);
  }

  json file = json::object();
  if(!configPath.empty())
  {
    std::ifstream f(configPath);
    if(!f)
      return usage(app, "cannot open " + configPath);
    try
    {
      file = json::parse(f);
    }
    catch(json::parse_error const& e)
    {
      return usage(app, configPath + ": " + e.what());
    }
    if(!file.is_object())
      return usage(app, configPath + " must hold a JSON object");
  }

  std::string name;
  auto subs = app.get_subcommands();
  if(!subs.empty())
    name = subs[0]->get_name();
  else if(file.contains("command") && file["command"].is_string())
    name = file["command"].get<std::string>();
  if(name.empty())
    return usage(app, configPath.empty() ? "no subcommand" : "config names no command");
  cli::CommandSpec const* cmd = cli::find_command(name);
  if(!cmd)
    return usage(app, "unknown command '" + name + "'");

  json cfg;
  try
  {
    cfg = cli::resolve_config(*cmd, file);
    CLI::App* sub = app.get_subcommand(name);
    for(auto const& o : cmd->opts)
      if(sub->count("--" + o.name))
        cfg[o.name] = cli::coerce(o, given[name][o.name]);
    if(seed >= 0)
      cfg["seed"] = seed;
  }
  catch(Error const& e)
  {
    return usage(app, e.what());
  }

  if(threads > 0)
    set_thread_count(threads);

  cli::Run run;
  run.config = cfg;
  run.outName = cmd->outName;
  std::string id = cli::record_id(cfg);
  run.dir = std::filesystem::path(runsDir) / id;
  std::filesystem::create_directories(run.dir);

  int code = 0;
  json record = {{"id", id}, {"version", cli::kVersion}, {"config", cfg}, {"seed", cfg["seed"]}};
  try
  {
    run.stage("total", [&] { cmd->run(run); });
  }
  catch(Error const& e)
  {
    record["error"] = {{"name", e.name()}, {"message", e.what()}};
    std::cerr << record["error"].dump() << "\n";
    code = e.name() == "ConfigError" ? 2 : 1;
  }
  catch(std::exception const& e)
  {
    record["error"] = {{"name", "InternalError"}, {"message", e.what()}};
    std::cerr << record["error"].dump() << "\n";
    code = 1;
  }
  record["outputs"] = run.outputs;
  record["timing"] = run.timing;
  std::ofstream(run.dir / "record.json") << record.dump(2) << "\n";
  std::cout << (run.dir / "record.json").string() << "\n";
  return code;
}
