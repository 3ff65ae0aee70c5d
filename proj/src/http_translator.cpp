#include <chrono>
#include <thread>

#include "httplib.h"
#include "pcl/augment.hpp"

namespace pcl {

HttpTranslator::HttpTranslator(HttpTranslatorConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.endpoint.empty()) throw DomainError("translator endpoint is empty");
  if (cfg_.retries < 0) throw DomainError("translator retries must be >= 0");
}

std::string HttpTranslator::forward(std::string_view text) const {
  return call(cfg_.source_lang, cfg_.pivot_lang, text);
}

std::string HttpTranslator::backward(std::string_view text) const {
  return call(cfg_.pivot_lang, cfg_.source_lang, text);
}

std::string HttpTranslator::call(const std::string& from, const std::string& to,
                                 std::string_view text) const {
  httplib::Client client(cfg_.endpoint);
  const auto timeout = std::chrono::duration<double>(cfg_.timeout_seconds);
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  const std::string path = "/translate/" + from + "/" + to;

  std::string last_error;
  bool reached = false;
  for (int attempt = 0; attempt <= cfg_.retries; ++attempt) {
    if (attempt) std::this_thread::sleep_for(std::chrono::milliseconds(50 * attempt));
    auto res = client.Post(path, std::string(text), "text/plain; charset=utf-8");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    reached = true;
    if (res->status == 200) return res->body;
    last_error = "HTTP " + std::to_string(res->status);
    if (res->status < 500) break;
  }
  if (!reached) {
    throw TranslatorUnavailable("translator at " + cfg_.endpoint + " unreachable (" + last_error +
                                "); check the endpoint or raise retries/timeout");
  }
  throw TranslationError(from + "->" + to + " failed: " + last_error);
}

}  // namespace pcl
