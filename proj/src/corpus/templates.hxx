// Nested and variadic class templates for instantiation scaling.

template<class T>
struct Vec {
    T elem;
};

template<class... Ts> struct Tuple;

template<class T, class... Rest>
struct Tuple<T, Rest...> {
    T head;
    Tuple<Rest...> tail;
    int size() { return 1 + tail.size(); }
};

template<>
struct Tuple<> {
    int size() { return 0; }
};
