#include "habsk/timeutil.hpp"

#include <chrono>
#include <cstdio>

#include <fmt/format.h>

#include "habsk/errors.hpp"

namespace habsk {

namespace chr = std::chrono;

UnixSeconds make_utc(int year, unsigned month, unsigned day, unsigned hour, unsigned minute, unsigned second) {
    const chr::year_month_day ymd{chr::year{year}, chr::month{month}, chr::day{day}};
    if (!ymd.ok() || hour > 23 || minute > 59 || second > 60)
        throw ParseError(fmt::format("invalid calendar time {:04}-{:02}-{:02} {:02}:{:02}:{:02}", year, month, day,
                                     hour, minute, second));
    const auto days = chr::sys_days{ymd}.time_since_epoch().count();
    return static_cast<UnixSeconds>(days) * 86400 + hour * 3600 + minute * 60 + second;
}

UnixSeconds parse_utc(std::string_view text) {
    const std::string s(text);
    int y = 0;
    unsigned mo = 0, d = 0, h = 0, mi = 0, se = 0;
    int consumed = 0;
    auto all_digits = [&] {
        for (char c : s)
            if (c < '0' || c > '9') return false;
        return true;
    };
    if (s.size() == 10 && all_digits()) {
        if (std::sscanf(s.c_str(), "%4d%2u%2u%2u", &y, &mo, &d, &h) == 4) return make_utc(y, mo, d, h);
    } else if (std::sscanf(s.c_str(), "%4d-%2u-%2uT%2u:%2u%n", &y, &mo, &d, &h, &mi, &consumed) == 5) {
        std::string_view rest = text.substr(static_cast<std::size_t>(consumed));
        if (!rest.empty() && rest.front() == ':') {
            int more = 0;
            if (std::sscanf(std::string(rest).c_str(), ":%2u%n", &se, &more) != 1)
                throw ParseError("bad seconds in timestamp '" + s + "'");
            rest.remove_prefix(static_cast<std::size_t>(more));
        }
        if (rest.empty() || rest == "Z") return make_utc(y, mo, d, h, mi, se);
    }
    throw ParseError("unrecognised timestamp '" + s + "'");
}

std::string format_utc(UnixSeconds t) {
    auto days = t / 86400;
    auto secs = t % 86400;
    if (secs < 0) {
        secs += 86400;
        --days;
    }
    const chr::year_month_day ymd{chr::sys_days{chr::days{days}}};
    return fmt::format("{:04}-{:02}-{:02}T{:02}:{:02}:{:02}Z", static_cast<int>(ymd.year()),
                       static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), secs / 3600,
                       (secs / 60) % 60, secs % 60);
}

}  // namespace habsk
