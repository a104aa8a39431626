// Extra entities for reflection and overload coverage.

namespace geo {
struct Point {
    double x = 0.0;
    double y = 2.5;
    double norm1() { return x + y; }
};
double dot(double a, double b) { return a * b; }
}

namespace empty {
}

float f3(float v) { return v; }
double f3(double v) { return v; }

long mix(long a, long b) { return a + b; }
double mix(double a, int b) { return a * b; }
double mix(float a, double b) { return a - b; }

template<class T>
T twice(T v) { return v + v; }
double twice(double v) { return v * 2.0; }

bool flag(bool b) { return b; }
