#include "dlva/rpc.hpp"

#include <cmath>

#include "httplib.h"
#include "json.hpp"

#include "dlva/error.hpp"

namespace dlva {
namespace {

struct ParsedUrl {
  std::string host_port;  // scheme://host:port
  std::string path;
};

ParsedUrl parse_url(const std::string& url) {
  size_t scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    raise(ErrorKind::RpcError, "expected http(s)://host[:port][/path], got " + url);
  }
  size_t path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

RawBytecode fetch_bytecode(const std::string& rpc_url, const std::string& address,
                           double timeout_seconds) {
  ParsedUrl url = parse_url(rpc_url);
  httplib::Client client(url.host_port);
  const time_t secs = static_cast<time_t>(timeout_seconds);
  const time_t usecs = static_cast<time_t>((timeout_seconds - std::floor(timeout_seconds)) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);

  nlohmann::json request = {
      {"jsonrpc", "2.0"},
      {"method", "eth_getCode"},
      {"params", {address, "latest"}},
      {"id", 1},
  };
  httplib::Result res = client.Post(url.path, request.dump(), "application/json");
  if (!res) {
    const auto err = res.error();
    if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
        err == httplib::Error::Write) {
      raise(ErrorKind::Timeout, "no response from " + rpc_url);
    }
    raise(ErrorKind::RpcError, "cannot reach " + rpc_url + " (" + httplib::to_string(err) + ")");
  }
  if (res->status != 200) {
    raise(ErrorKind::RpcError, "HTTP " + std::to_string(res->status) + " from " + rpc_url);
  }
  nlohmann::json reply;
  try {
    reply = nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorKind::RpcError, std::string("bad JSON-RPC reply: ") + e.what());
  }
  if (reply.contains("error")) {
    raise(ErrorKind::RpcError, "node error: " + reply["error"].dump());
  }
  if (!reply.contains("result") || !reply["result"].is_string()) {
    raise(ErrorKind::RpcError, "reply lacks a result string");
  }
  const std::string code = reply["result"].get<std::string>();
  RawBytecode bytecode = parse_hex(code);
  if (bytecode.bytes.empty()) {
    raise(ErrorKind::EmptyCode, "no code deployed at " + address);
  }
  return bytecode;
}

}  // namespace dlva
