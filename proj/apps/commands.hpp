#pragma once

#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace acl::cli
{

inline constexpr char const* kVersion = "0.1.0";

struct OptSpec
{
  std::string name;
  nlohmann::json def;   // null: optional, no default
  std::string help;
};

// One resolved invocation: full config snapshot plus its run directory.
struct Run
{
  nlohmann::json config;
  std::filesystem::path dir;
  std::string outName;
  nlohmann::json outputs = nlohmann::json::object();
  nlohmann::json timing = nlohmann::json::object();

  // Writes into the run directory; the primary output also goes to --out.
  void emit(std::string const& name, std::string const& text, bool primary = false);

  template <typename Fn>
  auto stage(std::string const& name, Fn&& fn) -> decltype(fn())
  {
    auto t0 = std::chrono::steady_clock::now();
    struct Stop
    {
      Run& r;
      std::string n;
      std::chrono::steady_clock::time_point t0;
      ~Stop() { r.timing[n] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); }
    } stop{*this, name, t0};
    return fn();
  }
};

struct CommandSpec
{
  std::string name, help;
  std::string outName;
  std::vector<OptSpec> opts;
  std::function<void(Run&)> run;
};

std::vector<CommandSpec> const& commands();
CommandSpec const* find_command(std::string const& name);

// Typed value of a command-line string, following the option's default.
nlohmann::json coerce(OptSpec const& o, std::string const& text);

// Config with defaults filled in; rejects unknown keys.
nlohmann::json resolve_config(CommandSpec const& c, nlohmann::json const& file);

// FNV-1a over the serialized config and version.
std::string record_id(nlohmann::json const& config);

}
