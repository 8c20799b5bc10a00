#pragma once

#include <array>
#include <string_view>

namespace toxvid::words {

// Roman-script Hindi vocabulary used to synthesize code-mixed transcripts.
// Every entry here (and in the marker lists below) counts as a Hindi token in
// corpus statistics.
inline constexpr std::array<std::string_view, 200> kHindi{
    "main", "tum", "aap", "hum", "woh", "yeh", "kya", "kyun", "kaise", "kab",
    "kahan", "kaun", "hai", "hain", "tha", "thi", "dhyaan", "hoga", "hogi", "ho",
    "nahi", "na", "haan", "ji", "bhai", "behen", "dost", "yaar", "log", "sab",
    "kuch", "bahut", "thoda", "zyada", "kam", "abhi", "phir", "kal", "aaj", "parso",
    "raat", "din", "subah", "shaam", "ghar", "bahar", "andar", "upar", "neeche", "saath",
    "paas", "door", "idhar", "udhar", "yahan", "wahan", "matlab", "samajh", "dekho", "suno",
    "bolo", "chalo", "ruko", "jao", "aao", "karo", "karna", "kiya", "karte", "karenge",
    "dekha", "dekhna", "sunna", "bolna", "bola", "kaha", "kehna", "socho", "socha", "pata",
    "lagta", "lagti", "laga", "raha", "rahi", "rahe", "gaya", "gayi", "gaye", "aaya",
    "aayi", "aaye", "diya", "liya", "dena", "lena", "milna", "mila", "mile", "baat",
    "baatein", "sawaal", "jawab", "kaam", "naukri", "paisa", "rupaye", "khana", "paani", "chai",
    "duniya", "desh", "sheher", "gaon", "sadak", "gaadi", "rasta", "mandir", "bazaar", "dukaan",
    "school", "kitaab", "padhai", "mehnat", "kismat", "zindagi", "pyaar", "dil", "mann", "dimaag",
    "sach", "jhooth", "galat", "sahi", "achha", "theek", "zaroori", "mushkil", "aasaan", "naya",
    "purana", "bada", "chhota", "lamba", "unchi", "garam", "thanda", "jaldi", "dheere", "hamesha",
    "kabhi", "shayad", "lekin", "par", "aur", "ya", "toh", "bhi", "sirf", "wala",
    "wali", "wale", "mera", "meri", "mere", "tera", "teri", "tere", "uska", "uski",
    "hamara", "tumhara", "apna", "apni", "inka", "unka", "isliye", "kyunki", "agar", "warna",
    "jab", "tab", "jitna", "utna", "bilkul", "ekdum", "zara", "arre", "accha", "chaliye",
    "dekhiye", "suniye", "batao", "bataiye", "samjhe", "samjha", "maloom", "intezaar", "khabar", "vichar"};

inline constexpr std::array<std::string_view, 100> kEnglish{
    "the", "video", "this", "that", "is", "was", "are", "and", "but", "so",
    "very", "really", "actually", "basically", "like", "just", "people", "guys", "friends", "channel",
    "subscribe", "comment", "share", "watch", "today", "news", "government", "system", "public", "media",
    "india", "country", "city", "police", "case", "issue", "problem", "point", "question", "answer",
    "time", "day", "year", "life", "work", "job", "money", "phone", "social", "online",
    "post", "viral", "trending", "content", "review", "movie", "song", "match", "team", "player",
    "leader", "party", "election", "vote", "speech", "interview", "reaction", "live", "stream", "update",
    "please", "sorry", "thanks", "okay", "yes", "no", "maybe", "sure", "right", "wrong",
    "good", "bad", "nice", "great", "best", "worst", "simple", "serious", "funny", "crazy",
    "full", "total", "power", "level", "style", "boss", "brother", "family", "respect", "support"};

// Label markers; all Roman-script Hindi.
inline constexpr std::array<std::string_view, 12> kToxic{
    "bakwas", "bewakoof", "nikamma", "ghatiya", "badtameez", "kameena",
    "gadha", "ullu", "pagal", "jhootha", "dhokebaaz", "nalayak"};
inline constexpr std::array<std::string_view, 4> kPositive{"khush", "shandaar", "badhiya", "mazedaar"};
inline constexpr std::array<std::string_view, 4> kNeutral{"saamanya", "aam", "seedha", "sadharan"};
inline constexpr std::array<std::string_view, 4> kNegative{"udaas", "dukhi", "naraz", "pareshan"};

// Text cue markers for the cross-modal XOR preset.
inline constexpr std::string_view kCueOn = "zabardast";
inline constexpr std::string_view kCueOff = "maamuli";

}  // namespace toxvid::words
