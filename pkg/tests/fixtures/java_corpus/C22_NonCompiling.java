package corpus;

public class C22_NonCompiling {
    /** Complete before the damage. */
    int intact() {
        return 7;
    }

    /** Truncated method; the closing braces are missing. */
    void truncated() {
        if (true) {
            int x = 1;
