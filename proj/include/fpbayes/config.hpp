#pragma once

#include <fstream>
#include <memory>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/property_tree/info_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace fpbayes {

/// Schema violation in a run configuration (unknown key, bad value, missing
/// required key).
class config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Read-tracking view over a parsed key-value tree (Boost INFO syntax:
/// `key value` lines and `section { ... }` blocks). Every key the run never
/// reads is reported by check_unknown().
class Config {
 public:
  static Config parse(const std::string& text, const std::string& name = "<config>") {
    auto tree = std::make_shared<boost::property_tree::ptree>();
    std::istringstream in(text);
    try {
      boost::property_tree::info_parser::read_info(in, *tree);
    } catch (const boost::property_tree::info_parser::info_parser_error& e) {
      throw config_error(name + ":" + std::to_string(e.line()) + ": " + e.message());
    }
    return Config(tree, tree.get(), "", std::make_shared<std::set<const boost::property_tree::ptree*>>());
  }

  bool has(const std::string& key) const { return node_->get_child_optional(path(key)).has_value(); }

  /// Sub-section; a missing section reads as empty.
  Config section(const std::string& key) const {
    const auto child = node_->get_child_optional(path(key));
    if (!child) return Config(root_, &empty(), prefix_ + key + ".", used_);
    used_->insert(&*child);
    return Config(root_, &*child, prefix_ + key + ".", used_);
  }

  /// Every repetition of `key` as a section (e.g. several `component { }` blocks).
  std::vector<Config> sections(const std::string& key) const {
    std::vector<Config> out;
    std::size_t k = 0;
    for (const auto& [name, child] : *node_)
      if (name == key) {
        used_->insert(&child);
        out.push_back(Config(root_, &child, prefix_ + key + "#" + std::to_string(k++) + ".", used_));
      }
    return out;
  }

  template <typename T>
  T get(const std::string& key) const {
    const auto child = node_->get_child_optional(path(key));
    if (!child) throw config_error("missing required key '" + prefix_ + key + "'");
    return convert<T>(key, *child);
  }

  template <typename T>
  T get(const std::string& key, const T& fallback) const {
    const auto child = node_->get_child_optional(path(key));
    if (!child) return fallback;
    return convert<T>(key, *child);
  }

  /// Whitespace-separated list value.
  template <typename T>
  std::vector<T> get_list(const std::string& key, std::vector<T> fallback = {}) const {
    const auto child = node_->get_child_optional(path(key));
    if (!child) return fallback;
    used_->insert(&*child);
    std::istringstream in(child->data());
    std::vector<T> out;
    std::string tok;
    while (in >> tok) out.push_back(parse_token<T>(key, tok));
    return out;
  }

  /// Throws on the first key nobody read.
  void check_unknown() const { walk(*node_, prefix_); }

 private:
  Config(std::shared_ptr<boost::property_tree::ptree> root, const boost::property_tree::ptree* node,
         std::string prefix, std::shared_ptr<std::set<const boost::property_tree::ptree*>> used)
      : root_{std::move(root)}, node_{node}, prefix_{std::move(prefix)}, used_{std::move(used)} {}

  static const boost::property_tree::ptree& empty() {
    static const boost::property_tree::ptree e;
    return e;
  }

  static boost::property_tree::ptree::path_type path(const std::string& key) {
    return boost::property_tree::ptree::path_type(key, '\x1f');
  }

  template <typename T>
  T convert(const std::string& key, const boost::property_tree::ptree& child) const {
    used_->insert(&child);
    if (!child.empty()) throw config_error("key '" + prefix_ + key + "' is a section, a value was expected");
    return parse_token<T>(key, child.data());
  }

  template <typename T>
  T parse_token(const std::string& key, const std::string& s) const {
    if constexpr (std::is_same_v<T, std::string>) {
      return s;
    } else if constexpr (std::is_same_v<T, bool>) {
      if (s == "true" || s == "1") return true;
      if (s == "false" || s == "0") return false;
      throw config_error("key '" + prefix_ + key + "': expected true/false, got '" + s + "'");
    } else {
      std::istringstream in(s);
      T v{};
      in >> v;
      if (in.fail() || !(in >> std::ws).eof())
        throw config_error("key '" + prefix_ + key + "': cannot parse '" + s + "'");
      return v;
    }
  }

  void walk(const boost::property_tree::ptree& node, const std::string& prefix) const {
    for (const auto& [name, child] : node) {
      if (!used_->count(&child)) throw config_error("unknown key '" + prefix + name + "'");
      if (!child.empty()) walk(child, prefix + name + ".");
    }
  }

  std::shared_ptr<boost::property_tree::ptree> root_;
  const boost::property_tree::ptree* node_;
  std::string prefix_;
  std::shared_ptr<std::set<const boost::property_tree::ptree*>> used_;
};

}  // namespace fpbayes
