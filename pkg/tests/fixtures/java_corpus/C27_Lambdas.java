package corpus;

import java.util.function.Function;

public class C27_Lambdas {
    /** Uses a block lambda. */
    Function<Integer, Integer> doubler() {
        return x -> {
            int y = x * 2;
            return y;
        };
    }

    /** Lambda in call arguments. */
    int apply(int seed) {
        return doubler().apply(((Function<Integer, Integer>) x -> {
            return x + 1;
        }).apply(seed));
    }
}
