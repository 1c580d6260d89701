#pragma once

// HTTP plumbing kept out of the core headers so only the CLI and the HTTP
// tests pay for compiling cpp-httplib.

#include "farmintel/common.hpp"

#include <httplib.h>

#include <memory>
#include <string>

namespace farmintel::http {

struct Url {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

/// Splits `http://host:port/path?q` into origin and path. Only plain HTTP is supported.
inline Url split_url(const std::string& url)
{
    const std::string scheme = "http://";
    if (url.rfind(scheme, 0) != 0) throw ValidationError("only http:// URLs are supported: '" + url + "'");
    const auto slash = url.find('/', scheme.size());
    Url u;
    u.origin = slash == std::string::npos ? url : url.substr(0, slash);
    u.path = slash == std::string::npos ? "/" : url.substr(slash);
    if (u.origin.size() == scheme.size()) throw ValidationError("URL has no host: '" + url + "'");
    return u;
}

/// Callable matching alerting::Transport: POSTs JSON, returns status or -1.
class JsonPoster {
public:
    explicit JsonPoster(const std::string& url, int timeout_seconds = 5) : url_(split_url(url))
    {
        client_ = std::make_shared<httplib::Client>(url_.origin);
        client_->set_connection_timeout(timeout_seconds, 0);
        client_->set_read_timeout(timeout_seconds, 0);
    }

    int operator()(const std::string& body) const
    {
        auto res = client_->Post(url_.path, body, "application/json");
        return res ? res->status : -1;
    }

private:
    Url url_;
    std::shared_ptr<httplib::Client> client_;
};

/// GET returning the body; throws RuntimeFault on transport errors or non-2xx.
inline std::string get_text(const std::string& url, int timeout_seconds = 10)
{
    const auto u = split_url(url);
    httplib::Client c(u.origin);
    c.set_connection_timeout(timeout_seconds, 0);
    c.set_read_timeout(timeout_seconds, 0);
    auto res = c.Get(u.path);
    if (!res) throw RuntimeFault("request to " + url + " failed: " + httplib::to_string(res.error()));
    if (res->status < 200 || res->status >= 300)
        throw RuntimeFault("request to " + url + " returned HTTP " + std::to_string(res->status));
    return res->body;
}

}  // namespace farmintel::http
