#pragma once

#include <string>

#include "dlva/disasm.hpp"

namespace dlva {

// eth_getCode at the latest block over JSON-RPC. "0x" responses raise
// EmptyCode; transport failures RpcError or Timeout.
RawBytecode fetch_bytecode(const std::string& rpc_url, const std::string& address,
                           double timeout_seconds = 10.0);

}  // namespace dlva
