// Declarations behind the five benchmark kernels.

double answer() { return 42.0; }

int f2(int x) { return x + 42; }
double f2(double x) { return x + 42.0; }

template<class T>
T add42(T t) {
    return T(t + 42);
}

struct S {
    double x = 1.5;
    double get() { return x; }
    double scale(double v) { return v * x; }
};
