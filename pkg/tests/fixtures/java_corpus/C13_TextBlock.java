package corpus;

public class C13_TextBlock {
    /** Emits a JSON template. */
    String template() {
        return """
            { "key": { "nested": } }
            """;
    }
}
