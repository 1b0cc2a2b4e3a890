#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dexter/labeling.hpp"

namespace dexter {

struct ClassifyRequest {
    std::string id;
    std::string text;
};

struct ClassifyResponse {
    std::string id;
    Label label = Label::Benign;
    double score = 0.0;
};

// Where the external classifier lives. Exactly one of `command` (a child
// process speaking the protocol on its standard streams) or `host` + `port`
// (a TCP server) must be set.
struct ExternalEndpoint {
    std::vector<std::string> command;
    std::string host;
    uint16_t port = 0;
    double timeout_s = 30.0;  // per batch
    size_t batch_size = 64;   // requests per batch
};

// Newline-delimited JSON exchange. Each request is one line,
// {"id":<string>,"text":<string>}, and a batch ends with a single blank
// line; the classifier answers one {"id","label","score"} line per request
// followed by its own blank line. Responses come back in request order.
// Throws Error(ProtocolError) for unknown or repeated ids, malformed lines,
// bad labels, or a peer that quits mid-batch; Error(Timeout) when a batch
// sees no terminator within timeout_s.
std::vector<ClassifyResponse> classify_external(const std::vector<ClassifyRequest>& requests,
                                                const ExternalEndpoint& endpoint);

}  // namespace dexter
