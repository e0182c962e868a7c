#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssgd/core.hpp"

namespace ssgd {

struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Mono 16 kHz sample source. Pull-based; single consumer.
class AudioStream {
public:
    AudioStream(std::vector<float> samples, int sample_rate)
        : samples_(std::move(samples)), sample_rate_(sample_rate) {
        if (sample_rate_ != 16000)
            throw FormatError("unsupported sample rate: " + std::to_string(sample_rate_) +
                              " Hz (expected 16000)");
    }

    int sample_rate() const { return sample_rate_; }
    std::size_t num_samples() const { return samples_.size(); }
    double duration() const {
        return static_cast<double>(samples_.size()) / sample_rate_;
    }
    const std::vector<float>& samples() const { return samples_; }

    /// Copy [begin, begin+count) with zero padding past the end.
    std::vector<float> read(std::size_t begin, std::size_t count) const {
        std::vector<float> out(count, 0.0f);
        if (begin < samples_.size()) {
            std::size_t n = std::min(count, samples_.size() - begin);
            std::copy(samples_.begin() + begin, samples_.begin() + begin + n, out.begin());
        }
        return out;
    }

private:
    std::vector<float> samples_;
    int sample_rate_;
};

namespace detail {

inline std::uint32_t read_u32(const unsigned char* p) {
    return p[0] | (p[1] << 8) | (p[2] << 16) | (std::uint32_t(p[3]) << 24);
}
inline std::uint16_t read_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

}  // namespace detail

/// Reads a RIFF WAV file. PCM16 and IEEE float32 only; mono 16 kHz enforced.
inline AudioStream open_wav(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("file not found: " + path);
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(f)),
                                   std::istreambuf_iterator<char>());
    if (buf.size() < 44 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
        std::memcmp(buf.data() + 8, "WAVE", 4) != 0)
        throw FormatError("not a RIFF/WAVE file: " + path);

    std::uint16_t audio_format = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    const unsigned char* data = nullptr;
    std::uint32_t data_size = 0;

    std::size_t pos = 12;
    while (pos + 8 <= buf.size()) {
        std::uint32_t chunk_size = detail::read_u32(&buf[pos + 4]);
        if (pos + 8 + chunk_size > buf.size())
            throw IoError("truncated chunk in " + path);
        if (std::memcmp(&buf[pos], "fmt ", 4) == 0) {
            if (chunk_size < 16) throw FormatError("malformed fmt chunk in " + path);
            audio_format = detail::read_u16(&buf[pos + 8]);
            channels = detail::read_u16(&buf[pos + 10]);
            rate = detail::read_u32(&buf[pos + 12]);
            bits = detail::read_u16(&buf[pos + 22]);
        } else if (std::memcmp(&buf[pos], "data", 4) == 0) {
            data = &buf[pos + 8];
            data_size = chunk_size;
        }
        pos += 8 + chunk_size + (chunk_size & 1);  // chunks are word-aligned
    }
    if (!data || audio_format == 0) throw FormatError("missing fmt/data chunk in " + path);
    if (channels != 1)
        throw FormatError("expected mono, got " + std::to_string(channels) + " channels");
    if (rate != 16000)
        throw FormatError("unsupported sample rate: " + std::to_string(rate) +
                          " Hz (expected 16000)");

    std::vector<float> samples;
    if (audio_format == 1 && bits == 16) {
        samples.resize(data_size / 2);
        for (std::size_t i = 0; i < samples.size(); ++i) {
            std::int16_t v = static_cast<std::int16_t>(detail::read_u16(data + 2 * i));
            samples[i] = static_cast<float>(v) / 32768.0f;
        }
    } else if (audio_format == 3 && bits == 32) {
        samples.resize(data_size / 4);
        for (std::size_t i = 0; i < samples.size(); ++i) {
            std::uint32_t v = detail::read_u32(data + 4 * i);
            float x;
            std::memcpy(&x, &v, 4);
            samples[i] = x;
        }
    } else {
        throw FormatError("unsupported sample format: format tag " +
                          std::to_string(audio_format) + ", " + std::to_string(bits) +
                          " bits (expected PCM16 or float32)");
    }
    return AudioStream(std::move(samples), static_cast<int>(rate));
}

/// Writes a mono PCM16 WAV file.
inline void write_wav(const std::string& path, const std::vector<float>& samples,
                      int sample_rate = 16000) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + path);
    auto put_u32 = [&](std::uint32_t v) {
        unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 24)};
        f.write(reinterpret_cast<char*>(b), 4);
    };
    auto put_u16 = [&](std::uint16_t v) {
        unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
        f.write(reinterpret_cast<char*>(b), 2);
    };
    std::uint32_t data_size = static_cast<std::uint32_t>(samples.size() * 2);
    f.write("RIFF", 4);
    put_u32(36 + data_size);
    f.write("WAVE", 4);
    f.write("fmt ", 4);
    put_u32(16);
    put_u16(1);  // PCM
    put_u16(1);  // mono
    put_u32(static_cast<std::uint32_t>(sample_rate));
    put_u32(static_cast<std::uint32_t>(sample_rate * 2));
    put_u16(2);
    put_u16(16);
    f.write("data", 4);
    put_u32(data_size);
    for (float s : samples) {
        float c = std::max(-1.0f, std::min(1.0f, s));
        auto v = static_cast<std::int16_t>(std::lround(c * 32767.0f));
        put_u16(static_cast<std::uint16_t>(v));
    }
}

/// Sliding windows starting at k*step for k*step < duration, each exactly
/// window*sample_rate samples, zero-padded on the right at the stream end.
inline std::vector<AudioWindow> slide(const AudioStream& stream, double window, double step) {
    if (!(step > 0.0) || window < step)
        throw std::invalid_argument("slide: need window >= step > 0");
    std::vector<AudioWindow> out;
    const int sr = stream.sample_rate();
    const auto window_samples = static_cast<std::size_t>(std::llround(window * sr));
    for (std::size_t k = 0; k * step < stream.duration(); ++k) {
        AudioWindow w;
        w.start = k * step;
        w.sample_rate = sr;
        auto begin = static_cast<std::size_t>(std::llround(w.start * sr));
        w.samples = stream.read(begin, window_samples);
        std::size_t avail = begin < stream.num_samples() ? stream.num_samples() - begin : 0;
        if (avail < window_samples)
            w.padded_tail = static_cast<double>(window_samples - avail) / sr;
        out.push_back(std::move(w));
    }
    return out;
}

}  // namespace ssgd
