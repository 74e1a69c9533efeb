#include "tot/prompts.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#ifndef TOT_DEFAULT_PROMPT_DIR
#define TOT_DEFAULT_PROMPT_DIR "prompts"
#endif

namespace tot {

PromptLibrary::PromptLibrary(std::filesystem::path root) : root_(std::move(root)) {
  if (!std::filesystem::is_directory(root_)) {
    throw std::runtime_error("prompt directory not found: " + root_.string());
  }
}

PromptLibrary PromptLibrary::default_library() {
  if (const char* env = std::getenv("TOT_PROMPT_DIR")) {
    return PromptLibrary(env);
  }
  return PromptLibrary(TOT_DEFAULT_PROMPT_DIR);
}

const std::string& PromptLibrary::get(const std::string& id) const {
  auto it = cache_.find(id);
  if (it != cache_.end()) return it->second;

  const std::filesystem::path path = root_ / (id + ".txt");
  std::ifstream in(path);
  if (!in) throw std::runtime_error("prompt template not found: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return cache_.emplace(id, buffer.str()).first->second;
}

bool PromptLibrary::has(const std::string& id) const {
  return cache_.count(id) > 0 || std::filesystem::exists(root_ / (id + ".txt"));
}

std::string PromptLibrary::render(const std::string& id,
                                  const std::map<std::string, std::string>& subs) const {
  return substitute(get(id), subs);
}

std::string PromptLibrary::substitute(const std::string& text,
                                      const std::map<std::string, std::string>& subs) {
  std::string out;
  out.reserve(text.size());
  size_t pos = 0;
  while (pos < text.size()) {
    const size_t open = text.find('{', pos);
    if (open == std::string::npos) {
      out.append(text, pos, std::string::npos);
      break;
    }
    const size_t close = text.find('}', open + 1);
    if (close == std::string::npos) {
      out.append(text, pos, std::string::npos);
      break;
    }
    const std::string name = text.substr(open + 1, close - open - 1);
    auto it = subs.find(name);
    if (it != subs.end()) {
      out.append(text, pos, open - pos);
      out.append(it->second);
      pos = close + 1;
    } else {
      // Unknown placeholder: leave it verbatim (templates carry literal
      // braces in output-format instructions).
      out.append(text, pos, open + 1 - pos);
      pos = open + 1;
    }
  }
  return out;
}

} // namespace tot
